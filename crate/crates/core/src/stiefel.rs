//! Geometry of the product manifold `St(r, p)^n` of `r x p` blocks with orthonormal
//! rows, over the reals or the complex numbers.
//!
//! A point is stored as one stacked `rn x p` matrix; tangent vectors and ambient
//! directions use the same layout.

use crate::error::{Error, Result};
use crate::field::{gaussian_matrix, hermitian_part, Field, Scalar};
use crate::linalg::{fro, polar_rows, seeded_rng};
use nalgebra::{DMatrix, DMatrixView};
use rand::Rng;

/// Largest accepted `||Y_i Y_i^* - I||_F` for a point.
pub const POINT_TOL: f64 = 1e-10;

/// Drift beyond which [`StiefelProductPoint::renormalize`] re-projects blocks.
pub const DRIFT_TOL: f64 = 1e-8;

/// Tangent vectors share the stacked `rn x p` layout of their base point.
pub type TangentVector<T> = DMatrix<T>;

#[derive(Debug, Clone, PartialEq)]
pub struct StiefelProductPoint<T: Scalar> {
    data: DMatrix<T>,
    r: usize,
}

/// Random tangent constructions built from one Gaussian `r x p` matrix `G` shared
/// by every block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TangentConstruction {
    /// Real: `G - Y_i G^T Y_i`. Complex: `2 G (I - Y_i^* Y_i) + (G Y_i^* - Y_i G^*) Y_i`.
    #[default]
    Standard,
    /// `G - Y_i G^* Y_i` in both fields.
    Plain,
}

impl<T: Scalar> StiefelProductPoint<T> {
    /// Wraps a stacked `rn x p` matrix, checking every block against [`POINT_TOL`].
    pub fn from_stacked(data: DMatrix<T>, r: usize) -> Result<Self> {
        if r == 0 || !data.nrows().is_multiple_of(r) {
            return Err(Error::param(format!(
                "{} rows do not split into blocks of {r}",
                data.nrows()
            )));
        }
        if data.ncols() < r {
            return Err(Error::param(format!("p = {} is smaller than r = {r}", data.ncols())));
        }
        let y = Self { data, r };
        let drift = y.max_violation();
        if !(drift <= POINT_TOL) {
            return Err(Error::param(format!(
                "blocks are not orthonormal (max ||Y_i Y_i^* - I||_F = {drift:e})"
            )));
        }
        Ok(y)
    }

    /// Like [`Self::from_stacked`], but maps each block to its polar factor first.
    pub fn project_stacked(mut data: DMatrix<T>, r: usize) -> Result<Self> {
        if r == 0 || !data.nrows().is_multiple_of(r) || data.ncols() < r {
            return Err(Error::param("matrix does not have r x p blocks with p >= r"));
        }
        for i in 0..data.nrows() / r {
            let q = polar_rows(&data.rows(i * r, r).into_owned())?;
            data.rows_mut(i * r, r).copy_from(&q);
        }
        Ok(Self { data, r })
    }

    pub fn from_blocks(blocks: &[DMatrix<T>]) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| Error::param("no blocks"))?;
        let (r, p) = first.shape();
        if blocks.iter().any(|b| b.shape() != (r, p)) {
            return Err(Error::param("blocks have different shapes"));
        }
        Self::from_stacked(crate::instance::stack_blocks(blocks), r)
    }

    /// Each block the orthonormalized rows of an i.i.d. Gaussian `r x p` matrix.
    pub fn random(n: usize, r: usize, p: usize, seed: u64) -> Self {
        Self::random_with(n, r, p, &mut seeded_rng(seed))
    }

    pub fn random_with<R: Rng + ?Sized>(n: usize, r: usize, p: usize, rng: &mut R) -> Self {
        assert!(r >= 1 && p >= r, "need 1 <= r <= p");
        let mut data = DMatrix::zeros(n * r, p);
        for i in 0..n {
            loop {
                let g: DMatrix<T> = gaussian_matrix(r, p, rng);
                // Gaussian matrices are full rank with probability one.
                if let Ok(q) = polar_rows(&g) {
                    data.rows_mut(i * r, r).copy_from(&q);
                    break;
                }
            }
        }
        Self { data, r }
    }

    pub fn n(&self) -> usize {
        self.data.nrows() / self.r
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    /// The stacked `rn x p` matrix.
    pub fn data(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<T> {
        self.data
    }

    pub fn block(&self, i: usize) -> DMatrixView<'_, T> {
        self.data.rows(i * self.r, self.r)
    }

    pub fn blocks(&self) -> Vec<DMatrix<T>> {
        (0..self.n()).map(|i| self.block(i).into_owned()).collect()
    }

    /// `max_i ||Y_i Y_i^* - I_r||_F`.
    pub fn max_violation(&self) -> f64 {
        let eye = DMatrix::<T>::identity(self.r, self.r);
        (0..self.n())
            .map(|i| {
                let b = self.block(i);
                fro(&(b * b.adjoint() - &eye))
            })
            .fold(0.0, f64::max)
    }

    /// Re-projects blocks whose constraint violation exceeds [`DRIFT_TOL`].
    pub fn renormalize(&mut self) -> Result<()> {
        let r = self.r;
        let eye = DMatrix::<T>::identity(r, r);
        for i in 0..self.n() {
            let b = self.block(i).into_owned();
            if fro(&(&b * b.adjoint() - &eye)) > DRIFT_TOL {
                self.data.rows_mut(i * r, r).copy_from(&polar_rows(&b)?);
            }
        }
        Ok(())
    }

    /// Hermitian parts of the diagonal `r x r` blocks of `A Y^*`.
    pub fn sbd_with(&self, a: &DMatrix<T>) -> Vec<DMatrix<T>> {
        sbd_of_product(a, &self.data, self.r)
    }

    /// Orthogonal projection onto the tangent space: `W - SBD(W Y^*) Y`.
    pub fn project_tangent(&self, w: &DMatrix<T>) -> TangentVector<T> {
        assert_eq!(w.shape(), self.data.shape(), "direction shape does not match point");
        let r = self.r;
        let mut out = w.clone();
        for i in 0..self.n() {
            let yi = self.block(i);
            let s = hermitian_part(&(w.rows(i * r, r) * yi.adjoint()));
            out.rows_mut(i * r, r).gemm(-T::one(), &s, &yi, T::one());
        }
        out
    }

    /// `max_i ||V_i Y_i^* + Y_i V_i^*||_F`; zero exactly for tangent vectors.
    pub fn tangent_violation(&self, v: &DMatrix<T>) -> f64 {
        let r = self.r;
        (0..self.n())
            .map(|i| {
                let m = v.rows(i * r, r) * self.block(i).adjoint();
                fro(&(&m + m.adjoint()))
            })
            .fold(0.0, f64::max)
    }

    /// Polar retraction: each block of `Y + t V` replaced by its polar factor.
    pub fn retract(&self, v: &DMatrix<T>, t: f64) -> Result<Self> {
        assert_eq!(v.shape(), self.data.shape(), "tangent shape does not match point");
        if t == 0.0 {
            return Ok(self.clone());
        }
        Self::project_stacked(&self.data + v * T::from_real(t), self.r)
    }

    /// Random tangent vector built from one Gaussian matrix shared by all blocks.
    pub fn random_tangent(&self, seed: u64) -> TangentVector<T> {
        self.random_tangent_with(&mut seeded_rng(seed), TangentConstruction::Standard)
    }

    pub fn random_tangent_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        construction: TangentConstruction,
    ) -> TangentVector<T> {
        let gamma: DMatrix<T> = gaussian_matrix(self.r, self.p(), rng);
        self.tangent_from_gaussian(&gamma, construction)
    }

    /// The tangent vector produced by a given shared Gaussian matrix `gamma`.
    pub fn tangent_from_gaussian(&self, gamma: &DMatrix<T>, construction: TangentConstruction) -> TangentVector<T> {
        let (r, p) = (self.r, self.p());
        assert_eq!(gamma.shape(), (r, p));
        let mut out = DMatrix::zeros(self.data.nrows(), p);
        let complex_scaled = T::FIELD == Field::Complex && construction == TangentConstruction::Standard;
        for i in 0..self.n() {
            let yi = self.block(i);
            let v = if complex_scaled {
                let eye = DMatrix::<T>::identity(p, p);
                let proj = eye - yi.adjoint() * yi;
                let skew = gamma * yi.adjoint() - yi * gamma.adjoint();
                gamma * proj * T::from_real(2.0) + skew * yi
            } else {
                gamma - yi * gamma.adjoint() * yi
            };
            out.rows_mut(i * r, r).copy_from(&v);
        }
        out
    }
}

/// Closed-form `E[V_i V_j^*]` for the random tangent construction at blocks `y_i`, `y_j`.
///
/// Real: `(p - 2) I + tr(Y_i Y_j^T) Y_i Y_j^T` for both constructions. Complex plain:
/// `p I + tr(Y_i Y_j^*) Y_i Y_j^*`. Complex standard:
/// `(4 (p - r) + ||Y_i Y_j^*||_F^2) I + tr(Y_i Y_j^*) Y_i Y_j^*`.
pub fn tangent_second_moment<T: Scalar>(
    yi: &DMatrix<T>,
    yj: &DMatrix<T>,
    construction: TangentConstruction,
) -> DMatrix<T> {
    let (r, p) = yi.shape();
    assert_eq!(yj.shape(), (r, p));
    let m = yi * yj.adjoint();
    let tr = m.trace();
    let diag = match (T::FIELD, construction) {
        (Field::Real, _) => p as f64 - 2.0,
        (Field::Complex, TangentConstruction::Plain) => p as f64,
        (Field::Complex, TangentConstruction::Standard) => 4.0 * (p - r) as f64 + fro(&m).powi(2),
    };
    DMatrix::identity(r, r) * T::from_real(diag) + &m * tr
}

/// Hermitian parts of the diagonal `r x r` blocks of `A B^*` for stacked `rn x p` panels.
pub fn sbd_of_product<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, r: usize) -> Vec<DMatrix<T>> {
    assert_eq!(a.shape(), b.shape());
    (0..a.nrows() / r)
        .map(|i| hermitian_part(&(a.rows(i * r, r) * b.rows(i * r, r).adjoint())))
        .collect()
}

/// Symmetric block-diagonal part of a dense `rn x rn` matrix.
pub fn sbd_dense<T: Scalar>(m: &DMatrix<T>, r: usize) -> DMatrix<T> {
    assert!(m.is_square() && m.nrows().is_multiple_of(r));
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() / r {
        let b = hermitian_part(&m.view((i * r, i * r), (r, r)).into_owned());
        out.view_mut((i * r, i * r), (r, r)).copy_from(&b);
    }
    out
}
