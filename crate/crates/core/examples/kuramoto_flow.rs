//! Stiefel-valued Kuramoto oscillators on a ring.
//!
//! With `p >= r + 2` random starts synchronize. On the scalar circle (`r = 1`, `p = 2`)
//! the twisted states are stable equilibria that never synchronize.
//!
//! ```bash
//! cargo run --release --example kuramoto_flow
//! ```

use orthosync::graphs::Graph;
use orthosync::kuramoto::{integrate_flow, twisted_state, FlowOptions};
use orthosync::stiefel::StiefelProductPoint;

fn main() -> orthosync::Result<()> {
    let ring = Graph::cycle(10)?;
    let opts = FlowOptions::default();
    for seed in 0..5 {
        let y0 = StiefelProductPoint::<f64>::random(10, 2, 4, seed);
        let rep = integrate_flow(&ring, y0, &opts)?;
        println!(
            "r=2 p=4 seed {seed}: {:?} at t = {:.1} ({} steps)",
            rep.termination, rep.final_time, rep.steps
        );
    }

    let ring = Graph::cycle(20)?;
    let rep = integrate_flow(&ring, twisted_state(20, 1, 2)?, &opts)?;
    println!(
        "r=1 p=2 twisted start: {:?}, sync error {:.3}, |rhs| {:.1e}",
        rep.termination, rep.final_sync_error, rep.final_rhs_norm
    );
    // The same twisted start has room to unwind once a third dimension is available.
    let lifted = twisted_state(20, 1, 3)?;
    let nudge = lifted.random_tangent(7);
    let rep = integrate_flow(&ring, lifted.retract(&nudge, 1e-3)?, &opts)?;
    println!("r=1 p=3 perturbed twisted start: {:?}", rep.termination);
    Ok(())
}
