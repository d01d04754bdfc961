//! Small dense kernels and a Lanczos eigensolver shared by the other modules.

use crate::error::{Error, Result};
use crate::field::{inner, Scalar};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator used for every seeded construction in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit mix of a base seed with a sequence of indices (splitmix64 finalizer).
pub fn mix_seed(base: u64, indices: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    indices.iter().fold(splitmix(base), |acc, &i| {
        splitmix(acc ^ splitmix(i.wrapping_add(0x632b_e59b_d9b4_e019)))
    })
}

/// Frobenius norm of a matrix.
pub fn fro<T: Scalar>(m: &DMatrix<T>) -> f64 {
    inner(m, m).max(0.0).sqrt()
}

/// Nearest matrix with orthonormal rows to a wide (or square) `r x p` matrix, via its SVD.
///
/// Fails if the matrix is numerically rank deficient, where the polar factor is not unique.
pub fn polar_rows<T: Scalar>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (r, p) = a.shape();
    debug_assert!(r <= p);
    if r == 1 {
        let norm = fro(a);
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::numerical("polar factor of a zero row", 0));
        }
        return Ok(a * T::from_real(1.0 / norm));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax.max(1e-300)) || !smax.is_finite() {
        return Err(Error::numerical(
            format!("rank-deficient block (singular values {smin:e} .. {smax:e})"),
            0,
        ));
    }
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    Ok(u * vt)
}

/// Eigenvalues (ascending) and eigenvectors of a dense Hermitian matrix.
pub fn hermitian_eigen<T: Scalar>(m: &DMatrix<T>) -> (DVector<f64>, DMatrix<T>) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Which end of the spectrum an iterative solve targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
}

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Krylov dimension before an explicit restart.
    pub max_krylov: usize,
    pub max_restarts: usize,
    /// Absolute residual target `|| A v - theta v ||`.
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_krylov: 120,
            max_restarts: 40,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigPair<T: Scalar> {
    pub value: f64,
    pub vector: DMatrix<T>,
    pub residual: f64,
    pub iterations: usize,
}

/// Extremal eigenpair of a self-adjoint operator by restarted Lanczos with full
/// reorthogonalization.
///
/// Vectors are matrices of any fixed shape and the inner product is the real part
/// of the Hilbert-Schmidt product, so a complex Hermitian operator is handled as a
/// real symmetric one of twice the dimension. `op` must be self-adjoint on the span
/// of `start` (for example a projected operator together with a projected start).
pub fn lanczos_extremal<T, F>(op: F, start: DMatrix<T>, which: Which, opts: &LanczosOptions) -> Result<EigPair<T>>
where
    T: Scalar,
    F: FnMut(&DMatrix<T>) -> DMatrix<T>,
{
    let (pair, converged) = lanczos_best(op, start, which, opts)?;
    if converged {
        Ok(pair)
    } else {
        Err(Error::Unconverged {
            what: "Lanczos eigensolver".into(),
            estimate: pair.value,
            residual: pair.residual,
            iterations: pair.iterations,
        })
    }
}

/// Like [`lanczos_extremal`], but returns the best pair found together with a
/// convergence flag instead of failing when the budget runs out.
pub fn lanczos_best<T, F>(
    mut op: F,
    start: DMatrix<T>,
    which: Which,
    opts: &LanczosOptions,
) -> Result<(EigPair<T>, bool)>
where
    T: Scalar,
    F: FnMut(&DMatrix<T>) -> DMatrix<T>,
{
    let start_norm = fro(&start);
    if !(start_norm > 0.0) {
        return Err(Error::param("Lanczos start vector is zero"));
    }
    let mut v = start * T::from_real(1.0 / start_norm);
    let mut total_iters = 0usize;
    let mut best: Option<EigPair<T>> = None;

    for _restart in 0..=opts.max_restarts {
        let mut basis: Vec<DMatrix<T>> = vec![v.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut scale = 0.0f64;
        let mut exhausted = false;

        for k in 0..opts.max_krylov {
            let mut w = op(&basis[k]);
            total_iters += 1;
            let alpha = inner(&w, &basis[k]);
            alphas.push(alpha);
            scale = scale.max(alpha.abs());
            // Two passes of classical Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for q in &basis {
                    let c = inner(&w, q);
                    add_scaled(&mut w, -c, q);
                }
            }
            let beta = fro(&w);
            scale = scale.max(beta);
            if beta <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
                exhausted = true;
                break;
            }
            betas.push(beta);
            basis.push(w * T::from_real(1.0 / beta));

            let m = alphas.len();
            if m.is_multiple_of(10) || m == opts.max_krylov {
                let (_, s) = ritz(&alphas, &betas[..m - 1], which);
                if (beta * s[m - 1]).abs() <= 0.25 * opts.tol {
                    break;
                }
            }
        }

        let m = alphas.len();
        let (theta, s) = ritz(&alphas, &betas[..m.saturating_sub(1).min(betas.len())], which);
        let mut x = DMatrix::zeros(v.nrows(), v.ncols());
        for (j, q) in basis.iter().take(m).enumerate() {
            add_scaled(&mut x, s[j], q);
        }
        let xn = fro(&x);
        x *= T::from_real(1.0 / xn);
        let ax = op(&x);
        total_iters += 1;
        let residual = fro(&(&ax - &x * T::from_real(theta)));
        let pair = EigPair {
            value: theta,
            vector: x.clone(),
            residual,
            iterations: total_iters,
        };
        let better = match &best {
            None => true,
            Some(b) => residual < b.residual,
        };
        if better {
            best = Some(pair.clone());
        }
        if residual <= opts.tol || exhausted {
            return Ok((pair, true));
        }
        v = x;
    }

    Ok((best.expect("at least one Lanczos cycle"), false))
}

/// `y += a x` for a real coefficient.
pub fn add_scaled<T: Scalar>(y: &mut DMatrix<T>, a: f64, x: &DMatrix<T>) {
    let a = T::from_real(a);
    y.iter_mut().zip(x.iter()).for_each(|(u, v)| *u += a * *v);
}

/// Extremal Ritz pair of the tridiagonal matrix with diagonal `alphas` and
/// off-diagonal `betas`.
fn ritz(alphas: &[f64], betas: &[f64], which: Which) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let (vals, vecs) = hermitian_eigen(&t);
    let k = match which {
        Which::Smallest => 0,
        Which::Largest => m - 1,
    };
    (vals[k], vecs.column(k).iter().copied().collect())
}

/// Spectral norm (largest absolute eigenvalue) of a self-adjoint operator.
pub fn self_adjoint_norm<T, F>(mut op: F, start: DMatrix<T>, rel_tol: f64) -> Result<f64>
where
    T: Scalar,
    F: FnMut(&DMatrix<T>) -> DMatrix<T>,
{
    // A rough scale first so the residual target can be relative.
    let rough = lanczos_extremal(
        &mut op,
        start.clone(),
        Which::Largest,
        &LanczosOptions {
            max_krylov: 30,
            max_restarts: 0,
            tol: f64::INFINITY,
        },
    )?;
    let scale = rough.value.abs().max(1e-300);
    let opts = LanczosOptions {
        tol: rel_tol * scale,
        ..LanczosOptions::default()
    };
    let hi = lanczos_extremal(&mut op, start.clone(), Which::Largest, &opts)?;
    let lo = lanczos_extremal(&mut op, start, Which::Smallest, &opts)?;
    Ok(hi.value.abs().max(lo.value.abs()))
}
