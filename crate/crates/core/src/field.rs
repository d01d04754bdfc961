//! Real and complex scalars behind one trait, so the geometry is written once.

use nalgebra::{Complex, ComplexField, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which group is being synchronized: O(r) over the reals or U(r) over the complex numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

impl FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(format!("unknown field `{other}` (expected real or complex)")),
        }
    }
}

/// Scalar type of a synchronization problem.
///
/// `f64` realizes the orthogonal case and `Complex<f64>` the unitary case. Inner
/// products between matrices are always the real part of the Hilbert-Schmidt product.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + fmt::Debug {
    const FIELD: Field;

    /// Standard normal draw. In the complex case real and imaginary parts are
    /// independent N(0, 1/2), so that `E|z|^2 = 1`.
    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Builds a scalar from real and imaginary parts. Real scalars ignore `im`.
    fn from_parts(re: f64, im: f64) -> Self;

    fn re(self) -> f64;

    fn im(self) -> f64;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }

    fn re(self) -> f64 {
        self
    }

    fn im(self) -> f64 {
        0.0
    }
}

impl Scalar for Complex<f64> {
    const FIELD: Field = Field::Complex;

    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn from_parts(re: f64, im: f64) -> Self {
        Complex::new(re, im)
    }

    fn re(self) -> f64 {
        self.re
    }

    fn im(self) -> f64 {
        self.im
    }
}

/// Matrix of i.i.d. standard normal entries.
pub fn gaussian_matrix<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| T::sample_normal(rng))
}

/// Real part of `tr(A B^*)`.
pub fn inner<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (*x * y.conjugate()).re()).sum()
}

/// `tr(A B^*)` including its imaginary part.
pub fn trace_product<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + *x * y.conjugate())
}

/// Hermitian part `(M + M^*)/2` of a square matrix.
pub fn hermitian_part<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.adjoint()) * T::from_real(0.5)
}
