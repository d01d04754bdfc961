//! Cross-module invariants on small random instances.

use nalgebra::Complex;
use orthosync::certificate::{certify, correlation, CertifyOptions, Verdict};
use orthosync::field::Scalar;
use orthosync::graphs::Graph;
use orthosync::instance::{NoiseModel, SyncInstance};
use orthosync::kuramoto::{energy, integrate_flow, FlowOptions};
use orthosync::solver::{objective, solve_from, Init, SolveOptions, SolveStatus};
use orthosync::stiefel::{StiefelProductPoint, POINT_TOL};
use proptest::prelude::*;

fn check_solve<T: Scalar>(n: usize, r: usize, extra: usize, sigma: f64, seed: u64) -> Result<(), TestCaseError> {
    let graph = Graph::erdos_renyi(n, 0.5, seed).unwrap();
    let inst = SyncInstance::<T>::generate(&graph, r, NoiseModel::Gaussian { sigma }, seed + 1).unwrap();
    let lhat = inst.connection_laplacian();
    let opts = SolveOptions {
        seed: seed + 2,
        record_history: true,
        ..SolveOptions::default()
    };
    let rep = solve_from(&lhat, r + extra, Init::Random, &opts).unwrap();
    prop_assert!(rep.point.max_violation() <= POINT_TOL);
    for w in rep.objective_history.windows(2) {
        prop_assert!(
            w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0),
            "objective rose: {} -> {}",
            w[0],
            w[1]
        );
    }
    if rep.status == SolveStatus::SocPoint {
        prop_assert!(rep.grad_norm <= rep.grad_tol);
        prop_assert!(rep.min_hess_eig >= -rep.hess_tol);
    }

    let z = inst.truth_stacked();
    let (raw, normalized) = correlation(&z, rep.point.data());
    prop_assert!(raw >= -1e-9 && (-1e-12..=1.0 + 1e-12).contains(&normalized));

    // The ground truth is feasible, so a certified global optimum cannot be worse.
    let cert = certify(&lhat, &rep.point, &CertifyOptions::default()).unwrap();
    if cert.verdict == Verdict::CertifiedGlobal {
        let truth = StiefelProductPoint::from_stacked(z, r).unwrap();
        let (f, f_truth) = (objective(&lhat, &rep.point), objective(&lhat, &truth));
        prop_assert!(f <= f_truth + 1e-8 * lhat.op_norm().max(1.0), "{f} > {f_truth}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn solver_and_certificate_are_consistent_real(n in 3usize..12, r in 1usize..3, extra in 0usize..4,
                                                   sigma in 0.0f64..1.5, seed in 0u64..1_000_000) {
        prop_assume!(r + extra > 1);
        check_solve::<f64>(n, r, extra, sigma, seed)?;
    }

    #[test]
    fn solver_and_certificate_are_consistent_complex(n in 3usize..12, r in 1usize..3, extra in 0usize..4,
                                                      sigma in 0.0f64..1.5, seed in 0u64..1_000_000) {
        check_solve::<Complex<f64>>(n, r, extra, sigma, seed)?;
    }

    #[test]
    fn flow_energy_never_increases(n in 3usize..10, p in 2usize..5, seed in 0u64..1_000_000) {
        let graph = Graph::erdos_renyi(n, 0.6, seed).unwrap();
        let y0 = StiefelProductPoint::<f64>::random(n, 1, p, seed + 1);
        let opts = FlowOptions { t_max: 20.0, sample_every: 1, ..FlowOptions::default() };
        let rep = integrate_flow(&graph, y0, &opts).unwrap();
        let slack = 1e-12 * graph.max_weighted_degree().max(1.0) * n as f64;
        for w in rep.trajectory.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy + slack);
        }
        prop_assert!((rep.trajectory.last().unwrap().energy - energy(&graph, &rep.point)).abs() <= 1e-12 * n as f64);
    }
}
