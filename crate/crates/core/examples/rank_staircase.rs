//! Escaping a spurious critical point by raising the relaxation rank.
//!
//! A twisted state on a ring is a second-order critical point for `p = 2` that the
//! certificate rejects. Padding it with a zero column gives a saddle at `p = 3`, which
//! the solver escapes to the global optimum.
//!
//! ```bash
//! cargo run --release --example rank_staircase
//! ```

use orthosync::certificate::{certify, correlation, CertifyOptions};
use orthosync::graphs::Graph;
use orthosync::instance::{NoiseModel, SyncInstance};
use orthosync::kuramoto::twisted_state;
use orthosync::solver::{solve_from, Init, SolveOptions};
use orthosync::stiefel::StiefelProductPoint;

fn main() -> orthosync::Result<()> {
    let n = 20;
    let inst = SyncInstance::<f64>::generate(&Graph::cycle(n)?, 1, NoiseModel::None, 0)?;
    let inst = inst.with_identity_truth();
    let lhat = inst.connection_laplacian();
    let z = inst.truth_stacked();

    let mut y = twisted_state(n, 1, 2)?;
    for p in 2..=4 {
        let rep = solve_from(&lhat, p, Init::Given(y), &SolveOptions::default())?;
        let cert = certify(&lhat, &rep.point, &CertifyOptions::default())?;
        let (_, corr) = correlation(&z, rep.point.data());
        println!(
            "p = {p}: {:?}, escapes {}, objective {:.3e}, correlation {corr:.4}, verdict {:?}",
            rep.status, rep.escapes, rep.objective, cert.verdict
        );
        let mut data = rep.point.into_data();
        data = data.insert_column(p, 0.0);
        y = StiefelProductPoint::from_stacked(data, 1)?;
    }
    Ok(())
}
