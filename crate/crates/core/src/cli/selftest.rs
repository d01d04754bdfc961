//! Embedded invariant checks at fixed seeds.
//!
//! Each check measures an error and compares it against a threshold multiplied by
//! `tol_scale`; shrinking the scale is a negative control that must fail.

use crate::certificate::{certify, correlation, residual_decomposition, CertifyOptions, Verdict};
use crate::field::{gaussian_matrix, inner, Scalar};
use crate::graphs::Graph;
use crate::instance::{NoiseModel, SyncInstance};
use crate::kuramoto::{flow_rhs, twisted_state};
use crate::linalg::{fro, seeded_rng};
use crate::solver::{gradient, hess_quadratic, hess_vec, objective, objective_change, solve_from, Init, SolveOptions};
use crate::stiefel::{tangent_second_moment, StiefelProductPoint, TangentConstruction};
use nalgebra::{Complex, DMatrix};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub error: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn check(name: &'static str, error: f64, threshold: f64, tol_scale: f64) -> Check {
    let threshold = threshold * tol_scale;
    Check {
        name,
        error,
        threshold,
        passed: error <= threshold,
    }
}

fn projection_error<T: Scalar>() -> f64 {
    let y = StiefelProductPoint::<T>::random(5, 2, 4, 11);
    let mut rng = seeded_rng(12);
    let w: DMatrix<T> = gaussian_matrix(10, 4, &mut rng);
    let v: DMatrix<T> = gaussian_matrix(10, 4, &mut rng);
    let pw = y.project_tangent(&w);
    let idem = fro(&(y.project_tangent(&pw) - &pw));
    let adj = (inner(&pw, &v) - inner(&w, &y.project_tangent(&v))).abs();
    idem.max(adj).max(y.tangent_violation(&pw))
}

fn retraction_error<T: Scalar>() -> f64 {
    let y = StiefelProductPoint::<T>::random(4, 2, 3, 21);
    let v = y.random_tangent(22);
    let h = 1e-5;
    let z = y.retract(&v, h).expect("small steps retract");
    fro(&((z.data() - y.data()) * T::from_real(1.0 / h) - &v)) / (h * fro(&v))
}

// Relative Frobenius error of the empirical second moment over `draws` samples.
fn moment_error<T: Scalar>(r: usize, p: usize, draws: usize) -> f64 {
    let y = StiefelProductPoint::<T>::random(2, r, p, 31);
    let mut rng = seeded_rng(32);
    let mut acc = DMatrix::<T>::zeros(r, r);
    for _ in 0..draws {
        let v = y.random_tangent_with(&mut rng, TangentConstruction::Standard);
        acc += v.rows(0, r) * v.rows(r, r).adjoint();
    }
    acc /= T::from_real(draws as f64);
    let exact = tangent_second_moment(
        &y.block(0).into_owned(),
        &y.block(1).into_owned(),
        TangentConstruction::Standard,
    );
    fro(&(acc - &exact)) / fro(&exact).max(1.0)
}

fn derivative_errors<T: Scalar>() -> (f64, f64, f64) {
    let g = Graph::erdos_renyi(6, 0.6, 41).unwrap();
    let inst = SyncInstance::<T>::generate(&g, 2, NoiseModel::Gaussian { sigma: 0.3 }, 42).unwrap();
    let lhat = inst.connection_laplacian();
    let y = StiefelProductPoint::<T>::random(6, 2, 4, 43);
    let v = y.random_tangent(44);
    let w = y.random_tangent(45);
    let h = 1e-6;
    let fd = objective_change(&lhat, &y.retract(&v, -h).unwrap(), &y.retract(&v, h).unwrap()) / (2.0 * h);
    let exact = inner(&gradient(&lhat, &y), &v);
    let grad_err = (fd - exact).abs() / exact.abs().max(1e-12);
    let a = inner(&hess_vec(&lhat, &y, &v), &w);
    let b = inner(&v, &hess_vec(&lhat, &y, &w));
    let sym_err = (a - b).abs() / a.abs().max(1.0);
    let quad_err = (inner(&hess_vec(&lhat, &y, &v), &v) - hess_quadratic(&lhat, &y, &v)).abs();
    (grad_err, sym_err, quad_err)
}

fn laplacian_identity_error<T: Scalar>() -> f64 {
    let g = Graph::erdos_renyi(10, 0.4, 51).unwrap();
    let inst = SyncInstance::<T>::generate(&g, 3, NoiseModel::Gaussian { sigma: 0.5 }, 52).unwrap();
    let a = inst.connection_laplacian().to_dense();
    let b = inst.clean_laplacian().to_dense() - inst.noise_matrix().to_dense();
    fro(&(a - b))
}

fn correlation_identity_error() -> f64 {
    let inst = SyncInstance::<Complex<f64>>::generate(&Graph::cycle(9).unwrap(), 2, NoiseModel::None, 61).unwrap();
    let z = inst.truth_stacked();
    let y = StiefelProductPoint::<Complex<f64>>::random(9, 2, 4, 62);
    let (raw, _) = correlation(&z, y.data());
    let (_, w) = residual_decomposition(&z, y.data());
    (raw - (81.0 * 2.0 - 9.0 * w.norm_squared())).abs()
}

fn noiseless_solve_gap() -> f64 {
    let g = Graph::circulant(30, 4).unwrap();
    let inst = SyncInstance::<f64>::generate(&g, 2, NoiseModel::None, 71).unwrap();
    let lhat = inst.connection_laplacian();
    let opts = SolveOptions {
        seed: 72,
        ..SolveOptions::default()
    };
    let Ok(rep) = solve_from(&lhat, 4, Init::Random, &opts) else {
        return f64::INFINITY;
    };
    let certified = certify(&lhat, &rep.point, &CertifyOptions::default())
        .map(|c| c.verdict == Verdict::CertifiedGlobal)
        .unwrap_or(false);
    if !certified {
        return f64::INFINITY;
    }
    (1.0 - correlation(&inst.truth_stacked(), rep.point.data()).1).abs() + objective(&lhat, &rep.point).abs()
}

/// Runs every check; the suite passes when all checks pass.
pub fn run(tol_scale: f64) -> Vec<Check> {
    let (grad_r, sym_r, quad_r) = derivative_errors::<f64>();
    let (grad_c, sym_c, quad_c) = derivative_errors::<Complex<f64>>();
    let twisted = twisted_state(20, 1, 2).expect("valid twisted state");
    vec![
        check("tangent projection (real)", projection_error::<f64>(), 1e-12, tol_scale),
        check(
            "tangent projection (complex)",
            projection_error::<Complex<f64>>(),
            1e-12,
            tol_scale,
        ),
        check(
            "retraction first order (real)",
            retraction_error::<f64>(),
            10.0,
            tol_scale,
        ),
        check(
            "retraction first order (complex)",
            retraction_error::<Complex<f64>>(),
            10.0,
            tol_scale,
        ),
        check(
            "tangent second moment (real)",
            moment_error::<f64>(2, 4, 40_000),
            0.03,
            tol_scale,
        ),
        check(
            "tangent second moment (complex)",
            moment_error::<Complex<f64>>(2, 3, 40_000),
            0.03,
            tol_scale,
        ),
        check("gradient finite difference (real)", grad_r, 1e-5, tol_scale),
        check("gradient finite difference (complex)", grad_c, 1e-5, tol_scale),
        check("Hessian symmetry (real)", sym_r.max(quad_r), 1e-10, tol_scale),
        check("Hessian symmetry (complex)", sym_c.max(quad_c), 1e-10, tol_scale),
        check(
            "connection Laplacian identity (real)",
            laplacian_identity_error::<f64>(),
            1e-12,
            tol_scale,
        ),
        check(
            "connection Laplacian identity (complex)",
            laplacian_identity_error::<Complex<f64>>(),
            1e-12,
            tol_scale,
        ),
        check("correlation identity", correlation_identity_error(), 1e-10, tol_scale),
        check("noiseless solve is certified", noiseless_solve_gap(), 1e-9, tol_scale),
        check(
            "twisted state is an equilibrium",
            fro(&flow_rhs(&Graph::cycle(20).unwrap(), &twisted)),
            1e-12,
            tol_scale,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_negative_control_fails() {
        let checks = run(1.0);
        for c in &checks {
            assert!(c.passed, "{}: {:e} > {:e}", c.name, c.error, c.threshold);
        }
        assert!(run(1e-30).iter().any(|c| !c.passed));
    }
}
