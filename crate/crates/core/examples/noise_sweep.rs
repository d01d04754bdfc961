//! A small phase-transition sweep through the same code path as `sync sweep`.
//!
//! ```bash
//! SYNC_THREADS=2 cargo run --release --example noise_sweep
//! ```

use orthosync::cli::config::ExperimentConfig;
use orthosync::cli::sweep::{run_sweep, sweep_csv};
use orthosync::graphs::GraphSpec;

fn main() -> orthosync::Result<()> {
    let cfg = ExperimentConfig {
        graph: GraphSpec::Circulant { n: 60, degree: 10 },
        p: vec![2, 4],
        sigma: vec![0.2, 0.6, 1.0, 1.4],
        trials: 3,
        seed: 9,
        ..ExperimentConfig::default()
    };
    let (rows, records) = run_sweep(&cfg)?;
    print!("{}", sweep_csv(&rows));
    let failed = records.iter().filter(|r| r.outcome.is_none()).count();
    println!("{} trials, {failed} failed", records.len());
    Ok(())
}
