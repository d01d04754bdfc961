//! Round-trip a planar pose graph through the g2o format and solve it.
//!
//! Pass a path to solve a real dataset instead, e.g. the fr079 pose graph:
//!
//! ```bash
//! cargo run --release --example pose_graph_io -- path/to/fr079.g2o
//! ```

use orthosync::certificate::{certify, CertifyOptions};
use orthosync::graphs::Graph;
use orthosync::instance::{NoiseModel, SyncInstance};
use orthosync::io::{parse_instance, parse_instance_str, write_g2o, AnyMeasurements, InstanceFormat};
use orthosync::solver::{solve_from, Init, SolveOptions};
use std::path::Path;

fn main() -> orthosync::Result<()> {
    let parsed = match std::env::args().nth(1) {
        Some(path) => parse_instance(Path::new(&path), InstanceFormat::G2o2d)?,
        None => {
            let graph = Graph::circulant(40, 4)?;
            let inst = SyncInstance::<f64>::generate(&graph, 2, NoiseModel::Gaussian { sigma: 0.1 }, 3)?;
            let text = write_g2o(inst.measurements())?;
            println!("synthetic g2o file, first lines:");
            for line in text.lines().take(3) {
                println!("  {line}");
            }
            parse_instance_str(&text, InstanceFormat::G2o2d)?
        }
    };
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    let AnyMeasurements::Real(m) = parsed.measurements else {
        unreachable!("g2o files hold real rotations");
    };
    println!("{} poses, {} relative rotations", m.n(), m.graph().num_edges());

    let lhat = m.connection_laplacian();
    let rep = solve_from(&lhat, 4, Init::Random, &SolveOptions::default())?;
    let cert = certify(&lhat, &rep.point, &CertifyOptions::default())?;
    println!(
        "objective {:.4}, rank {}, verdict {:?}",
        rep.objective, cert.numerical_rank, cert.verdict
    );
    Ok(())
}
