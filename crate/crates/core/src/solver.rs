//! Objective, Riemannian derivatives and a descent solver with negative-curvature
//! escape for `min <L, Y Y^*>` over `St(r, p)^n`.

use crate::block::BlockSymmetricMatrix;
use crate::error::{Error, Result};
use crate::field::{gaussian_matrix, inner, Field, Scalar};
use crate::linalg::{fro, hermitian_eigen, lanczos_best, polar_rows, seeded_rng, LanczosOptions, Which};
use crate::stiefel::{StiefelProductPoint, TangentVector};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Tangent spaces up to this real dimension get a dense Hessian eigensolve.
pub const DENSE_TANGENT_LIMIT: usize = 500;

/// `<L, Y Y^*> = Re tr(Y^* L Y)`.
pub fn objective<T: Scalar>(lhat: &BlockSymmetricMatrix<T>, y: &StiefelProductPoint<T>) -> f64 {
    inner(&lhat.apply(y.data()), y.data())
}

/// `f(Y') - f(Y)` evaluated as `Re <L (Y' - Y), Y' + Y>`, which keeps its relative
/// accuracy when the two objective values agree to many digits.
pub fn objective_change<T: Scalar>(
    lhat: &BlockSymmetricMatrix<T>,
    from: &StiefelProductPoint<T>,
    to: &StiefelProductPoint<T>,
) -> f64 {
    let diff = to.data() - from.data();
    let sum = to.data() + from.data();
    inner(&lhat.apply(&diff), &sum)
}

/// Riemannian gradient `2 P_Y(L Y)`.
pub fn gradient<T: Scalar>(lhat: &BlockSymmetricMatrix<T>, y: &StiefelProductPoint<T>) -> TangentVector<T> {
    y.project_tangent(&lhat.apply(y.data())) * T::from_real(2.0)
}

/// The Riemannian Hessian at a fixed point, `V -> 2 P_Y(S(Y) V)` with
/// `S(Y) = L - SBD(L Y Y^*)`.
pub struct Hessian<'a, T: Scalar> {
    lhat: &'a BlockSymmetricMatrix<T>,
    y: &'a StiefelProductPoint<T>,
    lambda: Vec<DMatrix<T>>,
}

impl<'a, T: Scalar> Hessian<'a, T> {
    pub fn new(lhat: &'a BlockSymmetricMatrix<T>, y: &'a StiefelProductPoint<T>) -> Self {
        let lambda = y.sbd_with(&lhat.apply(y.data()));
        Self { lhat, y, lambda }
    }

    /// `S(Y) V` without the tangent projection.
    pub fn s_apply(&self, v: &DMatrix<T>) -> DMatrix<T> {
        let r = self.y.r();
        let mut out = self.lhat.apply(v);
        for (i, l) in self.lambda.iter().enumerate() {
            out.rows_mut(i * r, r).gemm(-T::one(), l, &v.rows(i * r, r), T::one());
        }
        out
    }

    pub fn apply(&self, v: &DMatrix<T>) -> TangentVector<T> {
        self.y.project_tangent(&self.s_apply(v)) * T::from_real(2.0)
    }

    pub fn quadratic(&self, v: &DMatrix<T>) -> f64 {
        2.0 * inner(&self.s_apply(v), v)
    }
}

/// `2 <S(Y) V, V>` for a tangent vector `V`.
pub fn hess_quadratic<T: Scalar>(lhat: &BlockSymmetricMatrix<T>, y: &StiefelProductPoint<T>, v: &DMatrix<T>) -> f64 {
    Hessian::new(lhat, y).quadratic(v)
}

/// `2 P_Y(S(Y) V)`.
pub fn hess_vec<T: Scalar>(
    lhat: &BlockSymmetricMatrix<T>,
    y: &StiefelProductPoint<T>,
    v: &DMatrix<T>,
) -> TangentVector<T> {
    Hessian::new(lhat, y).apply(v)
}

/// Real dimension of the tangent space of `St(r, p)^n`.
pub fn tangent_dimension(n: usize, r: usize, p: usize, field: Field) -> usize {
    match field {
        Field::Real => n * (r * p - r * (r + 1) / 2),
        Field::Complex => n * (2 * r * p - r * r),
    }
}

#[derive(Debug, Clone)]
pub struct HessianEig<T: Scalar> {
    pub value: f64,
    /// Unit-norm tangent eigenvector.
    pub vector: TangentVector<T>,
    /// `||hess_vec(v) - value v||_F`.
    pub residual: f64,
}

/// Smallest eigenvalue of the Riemannian Hessian on the tangent space, with
/// residual target `tol * ||L||`.
///
/// Dense eigendecomposition in an orthonormal tangent basis when the tangent
/// dimension is at most [`DENSE_TANGENT_LIMIT`], Lanczos otherwise.
pub fn min_hessian_eig<T: Scalar>(
    lhat: &BlockSymmetricMatrix<T>,
    y: &StiefelProductPoint<T>,
    tol: f64,
) -> Result<HessianEig<T>> {
    let (pair, converged) = min_hessian_eig_best(lhat, y, tol, None)?;
    if converged {
        Ok(pair)
    } else {
        Err(Error::Unconverged {
            what: "tangent Hessian eigensolver".into(),
            estimate: pair.value,
            residual: pair.residual,
            iterations: 0,
        })
    }
}

fn min_hessian_eig_best<T: Scalar>(
    lhat: &BlockSymmetricMatrix<T>,
    y: &StiefelProductPoint<T>,
    tol: f64,
    lhat_norm: Option<f64>,
) -> Result<(HessianEig<T>, bool)> {
    let hess = Hessian::new(lhat, y);
    let dim = tangent_dimension(y.n(), y.r(), y.p(), T::FIELD);
    if dim == 0 {
        return Ok((
            HessianEig {
                value: 0.0,
                vector: DMatrix::zeros(y.data().nrows(), y.p()),
                residual: 0.0,
            },
            true,
        ));
    }
    if dim <= DENSE_TANGENT_LIMIT {
        return dense_min_eig(&hess, y).map(|e| (e, true));
    }
    let norm = lhat_norm.unwrap_or_else(|| lhat.op_norm()).max(f64::MIN_POSITIVE);
    let mut rng = seeded_rng(0x4e55);
    let start = y.project_tangent(&gaussian_matrix(y.data().nrows(), y.p(), &mut rng));
    let opts = LanczosOptions {
        max_krylov: 150,
        max_restarts: 60,
        tol: tol * norm,
    };
    let (pair, converged) = lanczos_best(|v| hess.apply(v), start, Which::Smallest, &opts)?;
    Ok((
        HessianEig {
            value: pair.value,
            vector: pair.vector,
            residual: pair.residual,
        },
        converged,
    ))
}

/// Orthonormal basis of one block's tangent space, as `r x p` matrices.
fn block_tangent_basis<T: Scalar>(yi: &DMatrix<T>) -> Result<Vec<DMatrix<T>>> {
    let (r, p) = yi.shape();
    let units: &[T] = match T::FIELD {
        Field::Real => &[T::one()][..],
        Field::Complex => &[T::one(), T::from_parts(0.0, 1.0)][..],
    };
    let target = tangent_dimension(1, r, p, T::FIELD);
    let mut basis: Vec<DMatrix<T>> = Vec::with_capacity(target);
    for a in 0..r {
        for b in 0..p {
            for &u in units {
                let mut e = DMatrix::<T>::zeros(r, p);
                e[(a, b)] = u;
                let s = crate::field::hermitian_part(&(&e * yi.adjoint()));
                let mut v = &e - s * yi;
                for _ in 0..2 {
                    for q in &basis {
                        let c = inner(&v, q);
                        crate::linalg::add_scaled(&mut v, -c, q);
                    }
                }
                let nv = fro(&v);
                if nv > 1e-6 {
                    basis.push(v * T::from_real(1.0 / nv));
                }
            }
        }
    }
    if basis.len() != target {
        return Err(Error::numerical(
            format!("tangent basis has {} vectors, expected {target}", basis.len()),
            0,
        ));
    }
    Ok(basis)
}

fn dense_min_eig<T: Scalar>(hess: &Hessian<'_, T>, y: &StiefelProductPoint<T>) -> Result<HessianEig<T>> {
    let (n, r, p) = (y.n(), y.r(), y.p());
    let mut local: Vec<(usize, DMatrix<T>)> = Vec::new();
    for i in 0..n {
        for b in block_tangent_basis(&y.block(i).into_owned())? {
            local.push((i, b));
        }
    }
    let d = local.len();
    let embed = |i: usize, b: &DMatrix<T>| {
        let mut v = DMatrix::<T>::zeros(n * r, p);
        v.rows_mut(i * r, r).copy_from(b);
        v
    };
    let mut h = DMatrix::<f64>::zeros(d, d);
    for (l, (il, bl)) in local.iter().enumerate() {
        let hv = hess.apply(&embed(*il, bl));
        for (k, (ik, bk)) in local.iter().enumerate() {
            h[(k, l)] = inner(&hv.rows(ik * r, r).into_owned(), bk);
        }
    }
    let h = (&h + h.transpose()) * 0.5;
    let (vals, vecs) = hermitian_eigen(&h);
    let mut v = DMatrix::<T>::zeros(n * r, p);
    for (k, (i, b)) in local.iter().enumerate() {
        let c = T::from_real(vecs[(k, 0)]);
        let mut rows = v.rows_mut(i * r, r);
        rows += b * c;
    }
    let nv = fro(&v);
    v *= T::from_real(1.0 / nv);
    let residual = fro(&(hess.apply(&v) - &v * T::from_real(vals[0])));
    Ok(HessianEig {
        value: vals[0],
        vector: v,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    SocPoint,
    MaxIters,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stationarity threshold, scaled by `max(1, ||L||) sqrt(rn)`.
    pub grad_tol: f64,
    /// Negative-curvature threshold, scaled by `||L||`.
    pub hess_tol: f64,
    /// Residual target of the Hessian eigensolver, scaled by `||L||`.
    pub eig_tol: f64,
    /// First trial step; `None` means `1 / (2 ||L||)`. Later steps use Barzilai-Borwein.
    pub initial_step: Option<f64>,
    pub backtrack: f64,
    pub armijo: f64,
    /// Escape trial step; `None` means `min(1, 1 / ||L||)`.
    pub escape_step: Option<f64>,
    /// Seed for random initialization.
    pub seed: u64,
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            grad_tol: 1e-10,
            hess_tol: 1e-8,
            eig_tol: 1e-7,
            initial_step: None,
            backtrack: 0.5,
            armijo: 1e-4,
            escape_step: None,
            seed: 0,
            record_history: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.grad_tol, self.hess_tol, self.eig_tol, self.armijo];
        if positive.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::param("solver tolerances must be positive"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::param("backtracking factor must lie in (0, 1)"));
        }
        if self.armijo >= 0.5 {
            return Err(Error::param("sufficient-decrease constant must be below 1/2"));
        }
        if matches!(self.initial_step, Some(t) if !(t > 0.0)) || matches!(self.escape_step, Some(t) if !(t > 0.0)) {
            return Err(Error::param("step sizes must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport<T: Scalar> {
    pub point: StiefelProductPoint<T>,
    pub objective: f64,
    pub grad_norm: f64,
    /// Absolute stationarity threshold that was applied.
    pub grad_tol: f64,
    /// Smallest tangent Hessian eigenvalue at termination (`NaN` if not evaluated).
    pub min_hess_eig: f64,
    /// Absolute curvature threshold that was applied.
    pub hess_tol: f64,
    pub iterations: usize,
    pub escapes: usize,
    pub status: SolveStatus,
    /// Objective after every accepted step (when requested), starting at the initial point.
    pub objective_history: Vec<f64>,
}

/// Serializable summary of a [`SolveReport`] without the point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub objective: f64,
    pub grad_norm: f64,
    pub grad_tol: f64,
    pub min_hess_eig: f64,
    pub hess_tol: f64,
    pub iterations: usize,
    pub escapes: usize,
    pub status: SolveStatus,
}

impl<T: Scalar> SolveReport<T> {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            objective: self.objective,
            grad_norm: self.grad_norm,
            grad_tol: self.grad_tol,
            min_hess_eig: self.min_hess_eig,
            hess_tol: self.hess_tol,
            iterations: self.iterations,
            escapes: self.escapes,
            status: self.status,
        }
    }
}

/// Starting point of a solve.
#[derive(Debug, Clone)]
pub enum Init<T: Scalar> {
    Random,
    Spectral,
    Given(StiefelProductPoint<T>),
}

/// Builds the starting point and runs [`solve`].
pub fn solve_from<T: Scalar>(
    lhat: &BlockSymmetricMatrix<T>,
    p: usize,
    init: Init<T>,
    opts: &SolveOptions,
) -> Result<SolveReport<T>> {
    let (n, r) = (lhat.n(), lhat.r());
    if p < r {
        return Err(Error::param(format!("p = {p} must be at least r = {r}")));
    }
    let y0 = match init {
        Init::Random => StiefelProductPoint::random(n, r, p, opts.seed),
        Init::Spectral => spectral_init(lhat, p)?,
        Init::Given(y) => y,
    };
    solve(lhat, y0, opts)
}

struct Trial<T: Scalar> {
    point: StiefelProductPoint<T>,
    grad: TangentVector<T>,
    change: f64,
}

/// Riemannian gradient descent (Barzilai-Borwein trial steps, Armijo backtracking)
/// until the gradient is small, then a Hessian check; negative curvature triggers
/// an escape step and descent resumes.
pub fn solve<T: Scalar>(
    lhat: &BlockSymmetricMatrix<T>,
    y0: StiefelProductPoint<T>,
    opts: &SolveOptions,
) -> Result<SolveReport<T>> {
    opts.validate()?;
    if y0.n() != lhat.n() || y0.r() != lhat.r() {
        return Err(Error::param("initial point does not match the problem dimensions"));
    }
    let (n, r) = (y0.n(), y0.r());
    let norm = lhat.op_norm();
    let scale = norm.max(f64::MIN_POSITIVE);
    let grad_tol = opts.grad_tol * norm.max(1.0) * ((r * n) as f64).sqrt();
    let hess_tol = opts.hess_tol * norm;
    // Below this magnitude objective differences are dominated by rounding in the
    // retraction; the line search then falls back to a derivative-based estimate.
    let noise_floor = 1e-13 * norm.max(1.0) * (r * n) as f64;

    let mut y = y0;
    let mut f = objective(lhat, &y);
    let mut history = if opts.record_history { vec![f] } else { Vec::new() };
    let mut g = gradient(lhat, &y);
    let mut prev: Option<(DMatrix<T>, DMatrix<T>)> = None;
    let mut iterations = 0;
    let mut escapes = 0;
    let mut min_hess_eig = f64::NAN;

    let finish = |y: StiefelProductPoint<T>, g: &DMatrix<T>, status, iterations, escapes, min_hess_eig, history| {
        Ok(SolveReport {
            objective: objective(lhat, &y),
            point: y,
            grad_norm: fro(g),
            grad_tol,
            min_hess_eig,
            hess_tol,
            iterations,
            escapes,
            status,
            objective_history: history,
        })
    };

    loop {
        let gn = fro(&g);
        if gn <= grad_tol {
            let (eig, _) = min_hessian_eig_best(lhat, &y, opts.eig_tol, Some(norm))?;
            min_hess_eig = eig.value;
            if eig.value >= -hess_tol {
                return finish(y, &g, SolveStatus::SocPoint, iterations, escapes, min_hess_eig, history);
            }
            if iterations >= opts.max_iters {
                return finish(y, &g, SolveStatus::MaxIters, iterations, escapes, min_hess_eig, history);
            }
            let mut v = eig.vector;
            if inner(&g, &v) > 0.0 {
                v = -v;
            }
            let mut t = opts.escape_step.unwrap_or_else(|| (1.0 / scale).min(1.0));
            let mut accepted = None;
            for _ in 0..60 {
                if let Ok(cand) = y.retract(&v, t) {
                    let change = objective_change(lhat, &y, &cand);
                    if change <= -0.25 * t * t * eig.value.abs() {
                        accepted = Some((cand, change));
                        break;
                    }
                }
                t *= opts.backtrack;
            }
            let Some((cand, change)) = accepted else {
                log::warn!("negative-curvature step found no decrease (eigenvalue {:e})", eig.value);
                return finish(
                    y,
                    &g,
                    SolveStatus::NumericalFailure,
                    iterations,
                    escapes,
                    min_hess_eig,
                    history,
                );
            };
            log::debug!(
                "escape at iteration {iterations}: eigenvalue {:e}, step {t:e}",
                eig.value
            );
            y = cand;
            f += change;
            if opts.record_history {
                history.push(f);
            }
            g = gradient(lhat, &y);
            prev = None;
            iterations += 1;
            escapes += 1;
            continue;
        }
        if iterations >= opts.max_iters {
            return finish(y, &g, SolveStatus::MaxIters, iterations, escapes, min_hess_eig, history);
        }

        let mut t = match &prev {
            Some((s, dg)) => {
                let sy = inner(s, dg).abs();
                let ss = inner(s, s);
                if sy > 0.0 {
                    (ss / sy).clamp(1e-6 / scale, 1e3 / scale)
                } else {
                    1.0 / scale
                }
            }
            None => opts.initial_step.unwrap_or(0.5 / scale),
        };
        let d = -&g;
        let slope = -gn * gn;
        let mut accepted: Option<Trial<T>> = None;
        for _ in 0..80 {
            if let Ok(cand) = y.retract(&d, t) {
                let change = objective_change(lhat, &y, &cand);
                let sufficient = opts.armijo * t * slope;
                if change <= sufficient {
                    let grad = gradient(lhat, &cand);
                    accepted = Some(Trial {
                        point: cand,
                        grad,
                        change,
                    });
                    break;
                }
                if change.abs() <= noise_floor {
                    // Trapezoid estimate of the change along the step, exact for quadratics.
                    let grad = gradient(lhat, &cand);
                    let model = 0.5 * t * (slope + inner(&grad, &d));
                    if model <= sufficient {
                        accepted = Some(Trial {
                            point: cand,
                            grad,
                            change: model,
                        });
                        break;
                    }
                }
            }
            t *= opts.backtrack;
        }
        let Some(trial) = accepted else {
            log::warn!("line search failed at iteration {iterations} (gradient norm {gn:e})");
            return finish(
                y,
                &g,
                SolveStatus::NumericalFailure,
                iterations,
                escapes,
                min_hess_eig,
                history,
            );
        };
        prev = Some((trial.point.data() - y.data(), &trial.grad - &g));
        y = trial.point;
        g = trial.grad;
        f += trial.change;
        if opts.record_history {
            history.push(f);
        }
        iterations += 1;
    }
}

/// Eigenvector initialization: the `r` lowest eigenvectors of `L`, each `r x r`
/// block projected to the nearest orthogonal (unitary) matrix and zero-padded to
/// `r x p`.
pub fn spectral_init<T: Scalar>(lhat: &BlockSymmetricMatrix<T>, p: usize) -> Result<StiefelProductPoint<T>> {
    let (n, r) = (lhat.n(), lhat.r());
    if p < r {
        return Err(Error::param(format!("p = {p} must be at least r = {r}")));
    }
    let vecs = lowest_eigenvectors(lhat, r)?;
    let mut data = DMatrix::<T>::zeros(n * r, p);
    let mut fallbacks = 0;
    for i in 0..n {
        let block = vecs.rows(i * r, r).into_owned();
        let q = polar_rows(&block).unwrap_or_else(|_| {
            fallbacks += 1;
            DMatrix::identity(r, r)
        });
        data.view_mut((i * r, 0), (r, r)).copy_from(&q);
    }
    if fallbacks > 0 {
        log::warn!("spectral initialization: {fallbacks} singular block(s) replaced by the identity");
    }
    StiefelProductPoint::from_stacked(data, r)
}

fn lowest_eigenvectors<T: Scalar>(lhat: &BlockSymmetricMatrix<T>, k: usize) -> Result<DMatrix<T>> {
    let dim = lhat.dim();
    if dim <= crate::block::DENSE_LIMIT {
        let (_, vecs) = hermitian_eigen(&lhat.to_dense());
        return Ok(vecs.columns(0, k).into_owned());
    }
    // Deflated Lanczos: converged vectors are shifted above the spectrum.
    let shift = 2.0 * lhat.op_norm() + 1.0;
    let mut found: Vec<DMatrix<T>> = Vec::with_capacity(k);
    let mut rng = seeded_rng(0x5bec);
    let opts = LanczosOptions {
        max_krylov: 200,
        max_restarts: 100,
        tol: 1e-10 * shift,
    };
    for _ in 0..k {
        let start: DMatrix<T> = gaussian_matrix(dim, 1, &mut rng);
        let op = |x: &DMatrix<T>| {
            let mut out = lhat.apply(x);
            for q in &found {
                let c = q.dotc(x);
                out += q * (c * T::from_real(shift));
            }
            out
        };
        let (pair, converged) = lanczos_best(op, start, Which::Smallest, &opts)?;
        if !converged {
            return Err(Error::Unconverged {
                what: "lowest eigenvectors of the connection Laplacian".into(),
                estimate: pair.value,
                residual: pair.residual,
                iterations: pair.iterations,
            });
        }
        let mut v = pair.vector;
        for q in &found {
            let c = q.dotc(&v);
            v -= q * c;
        }
        let nv = fro(&v);
        found.push(v * T::from_real(1.0 / nv));
    }
    let mut out = DMatrix::zeros(dim, k);
    for (j, q) in found.iter().enumerate() {
        out.set_column(j, &q.column(0));
    }
    Ok(out)
}
