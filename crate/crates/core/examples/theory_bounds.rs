//! How the closed-form guarantees degrade with noise, compared with what the solver finds.
//!
//! ```bash
//! cargo run --release --example theory_bounds
//! ```

use orthosync::certificate::{certify, correlation, theory_bounds, CertifyOptions};
use orthosync::graphs::Graph;
use orthosync::instance::{noise_operator_norm, NoiseModel, SyncInstance};
use orthosync::solver::{solve_from, Init, SolveOptions};

fn main() -> orthosync::Result<()> {
    let (n, r, p) = (50, 2, 8);
    let graph = Graph::complete(n)?;
    let lambda2 = graph.laplacian_summary()?.lambda2;
    println!("complete graph, n = {n}, lambda_2 = {lambda2:.1}");
    println!("sigma   ||Delta||  corr_lower(raw)  corr(raw)   rank  rank_bound");
    for sigma in [0.01, 0.05, 0.1, 0.3] {
        let inst = SyncInstance::<f64>::generate(&graph, r, NoiseModel::Gaussian { sigma }, 5)?;
        let lhat = inst.connection_laplacian();
        let delta = noise_operator_norm(&inst.noise_matrix());
        let b = theory_bounds(p, r, n, lambda2, delta)?;
        let rep = solve_from(&lhat, p, Init::Random, &SolveOptions::default())?;
        let cert = certify(&lhat, &rep.point, &CertifyOptions::default())?;
        let (raw, _) = correlation(&inst.truth_stacked(), rep.point.data());
        println!(
            "{sigma:<7} {delta:<10.4} {:<16.1} {raw:<11.1} {:<5} {:.1}",
            b.thm4_corr_lower.unwrap_or(f64::NAN),
            cert.numerical_rank,
            b.thm2_rank_bound.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
