//! Block-sparse Hermitian matrices with `r x r` blocks.

use crate::error::{Error, Result};
use crate::field::gaussian_matrix;
use crate::field::{hermitian_part, Scalar};
use crate::linalg::{fro, hermitian_eigen, lanczos_extremal, seeded_rng, self_adjoint_norm, LanczosOptions, Which};
use nalgebra::DMatrix;

/// Dense eigensolves are used up to this dimension.
pub const DENSE_LIMIT: usize = 2000;

/// Hermitian `rn x rn` matrix stored as `n` diagonal blocks plus the strictly upper
/// off-diagonal blocks `(i, j)` with `i < j`. Block `(j, i)` is the adjoint of `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSymmetricMatrix<T: Scalar> {
    n: usize,
    r: usize,
    diag: Vec<DMatrix<T>>,
    upper: Vec<(usize, usize, DMatrix<T>)>,
}

impl<T: Scalar> BlockSymmetricMatrix<T> {
    pub fn zeros(n: usize, r: usize) -> Self {
        Self {
            n,
            r,
            diag: vec![DMatrix::zeros(r, r); n],
            upper: Vec::new(),
        }
    }

    /// Assembles from explicit blocks. Diagonal blocks must be Hermitian; off-diagonal
    /// entries may come in either orientation and are stored as `i < j`.
    pub fn from_blocks(
        n: usize,
        r: usize,
        diag: Vec<DMatrix<T>>,
        off: impl IntoIterator<Item = (usize, usize, DMatrix<T>)>,
    ) -> Result<Self> {
        if diag.len() != n {
            return Err(Error::param(format!(
                "expected {n} diagonal blocks, got {}",
                diag.len()
            )));
        }
        for (k, d) in diag.iter().enumerate() {
            if d.shape() != (r, r) {
                return Err(Error::param(format!("diagonal block {k} has shape {:?}", d.shape())));
            }
            let scale = fro(d).max(1.0);
            if fro(&(d - d.adjoint())) > 1e-12 * scale {
                return Err(Error::param(format!("diagonal block {k} is not Hermitian")));
            }
        }
        let mut upper = Vec::new();
        for (i, j, b) in off {
            if i >= n || j >= n || i == j {
                return Err(Error::param(format!("invalid off-diagonal block index ({i}, {j})")));
            }
            if b.shape() != (r, r) {
                return Err(Error::param(format!("block ({i}, {j}) has shape {:?}", b.shape())));
            }
            if i < j {
                upper.push((i, j, b));
            } else {
                upper.push((j, i, b.adjoint()));
            }
        }
        upper.sort_by_key(|(i, j, _)| (*i, *j));
        if upper.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::param("duplicate off-diagonal block"));
        }
        Ok(Self { n, r, diag, upper })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Side length `rn` of the full matrix.
    pub fn dim(&self) -> usize {
        self.n * self.r
    }

    pub fn diagonal_blocks(&self) -> &[DMatrix<T>] {
        &self.diag
    }

    /// Stored off-diagonal blocks `(i, j, B_ij)` with `i < j`.
    pub fn upper_blocks(&self) -> &[(usize, usize, DMatrix<T>)] {
        &self.upper
    }

    /// Block `(i, j)`, completing the lower triangle by adjoints. Missing blocks are zero.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<T> {
        if i == j {
            return self.diag[i].clone();
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        match self.upper.binary_search_by_key(&(a, b), |(x, y, _)| (*x, *y)) {
            Ok(k) if i < j => self.upper[k].2.clone(),
            Ok(k) => self.upper[k].2.adjoint(),
            Err(_) => DMatrix::zeros(self.r, self.r),
        }
    }

    /// Same off-diagonal structure with new diagonal blocks.
    pub fn with_diagonal(&self, diag: Vec<DMatrix<T>>) -> Self {
        assert_eq!(diag.len(), self.n);
        Self {
            n: self.n,
            r: self.r,
            diag,
            upper: self.upper.clone(),
        }
    }

    /// Product with an `rn x p` panel.
    pub fn apply(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let r = self.r;
        assert_eq!(x.nrows(), self.dim(), "panel height does not match");
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for (i, d) in self.diag.iter().enumerate() {
            out.rows_mut(i * r, r).gemm(T::one(), d, &x.rows(i * r, r), T::zero());
        }
        for (i, j, b) in &self.upper {
            out.rows_mut(i * r, r).gemm(T::one(), b, &x.rows(j * r, r), T::one());
            out.rows_mut(j * r, r).gemm_ad(T::one(), b, &x.rows(i * r, r), T::one());
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let r = self.r;
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, d) in self.diag.iter().enumerate() {
            m.view_mut((i * r, i * r), (r, r)).copy_from(d);
        }
        for (i, j, b) in &self.upper {
            m.view_mut((i * r, j * r), (r, r)).copy_from(b);
            m.view_mut((j * r, i * r), (r, r)).copy_from(&b.adjoint());
        }
        m
    }

    /// Symmetric block-diagonal part: off-diagonal blocks dropped, diagonal blocks
    /// replaced by their Hermitian parts.
    pub fn sbd(&self) -> Self {
        Self {
            n: self.n,
            r: self.r,
            diag: self.diag.iter().map(hermitian_part).collect(),
            upper: Vec::new(),
        }
    }

    /// Spectral norm, by Lanczos (relative accuracy `1e-9`).
    pub fn op_norm(&self) -> f64 {
        if self.diag.iter().all(|d| d.iter().all(|v| *v == T::zero()))
            && self.upper.iter().all(|(_, _, b)| b.iter().all(|v| *v == T::zero()))
        {
            return 0.0;
        }
        let mut rng = seeded_rng(0x0b10c);
        let start: DMatrix<T> = gaussian_matrix(self.dim(), 1, &mut rng);
        match self_adjoint_norm(|x| self.apply(x), start, 1e-9) {
            Ok(v) => v,
            Err(Error::Unconverged { estimate, .. }) => estimate.abs(),
            Err(_) => self.dense_norm(),
        }
    }

    fn dense_norm(&self) -> f64 {
        let (vals, _) = hermitian_eigen(&self.to_dense());
        vals[0].abs().max(vals[vals.len() - 1].abs())
    }

    /// Smallest eigenvalue: dense up to [`DENSE_LIMIT`], Lanczos beyond.
    pub fn min_eigenvalue(&self, tol: f64) -> Result<f64> {
        if self.dim() <= DENSE_LIMIT {
            let (vals, _) = hermitian_eigen(&self.to_dense());
            return Ok(vals[0]);
        }
        let mut rng = seeded_rng(0x5111);
        let start: DMatrix<T> = gaussian_matrix(self.dim(), 1, &mut rng);
        let opts = LanczosOptions {
            max_krylov: 200,
            max_restarts: 100,
            tol,
        };
        Ok(lanczos_extremal(|x| self.apply(x), start, Which::Smallest, &opts)?.value)
    }
}
