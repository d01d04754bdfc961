//! The `sync` command-line harness.

pub mod commands;
pub mod config;
pub mod flow;
pub mod problem;
pub mod selftest;
pub mod svg;
pub mod sweep;

use crate::error::Result;
use crate::field::Field;
use crate::io::InstanceFormat;
use clap::{Args, Parser, Subcommand};
use config::{ExperimentConfig, InitKind};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "sync",
    version,
    about = "Orthogonal and unitary group synchronization via Burer-Monteiro"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON experiment configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic instance and write it as a measurement file.
    Gen {
        /// Also write the ground truth as a point file.
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
    /// Solve, certify and print a JSON report (exit 0 SOC point, 2 iteration budget, 3 numerical failure).
    Solve {
        /// Write the final point to this file.
        #[arg(long)]
        point_out: Option<PathBuf>,
    },
    /// Certify a point read from a file against the configured instance.
    Certify {
        /// Point file as written by `solve --point-out`.
        #[arg(long)]
        point: PathBuf,
    },
    /// Noise sweep over p and sigma; CSV plus optional SVG charts.
    Sweep {
        /// Write one SVG line chart per metric into this directory.
        #[arg(long)]
        svg_dir: Option<PathBuf>,
    },
    /// Kuramoto flow trajectories; per-trial CSV summary.
    Flow {
        /// Write one trajectory CSV per trial into this directory.
        #[arg(long)]
        trajectory_dir: Option<PathBuf>,
    },
    /// Run the embedded invariant checks.
    Selftest {
        /// Multiplier applied to every check threshold.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Base seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated list of relaxation ranks.
    #[arg(long, global = true, value_delimiter = ',')]
    pub p: Option<Vec<usize>>,
    /// Comma-separated list of noise levels.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Block size (the group is O(r) or U(r)).
    #[arg(long, global = true)]
    pub r: Option<usize>,
    /// real or complex.
    #[arg(long, global = true)]
    pub field: Option<Field>,
    /// Trials per sweep cell, or flow trajectories.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// random, spectral or twisted.
    #[arg(long, global = true)]
    pub init: Option<InitKind>,
    /// Winding number of the twisted initialization.
    #[arg(long, global = true)]
    pub twist: Option<usize>,
    /// Solver iteration budget.
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Measurement file. solve and certify use its measurements; gen, sweep and flow only its graph.
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    /// Format of instance files read or written: edge_measurements or g2o_2d.
    #[arg(long, global = true)]
    pub format: Option<InstanceFormat>,
    /// Main output path (defaults to stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.p {
            cfg.p = v.clone();
        }
        if let Some(v) = &self.sigma {
            cfg.sigma = v.clone();
        }
        if let Some(v) = self.r {
            cfg.r = v;
        }
        if let Some(v) = self.field {
            cfg.field = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.init {
            cfg.init = v;
        }
        if let Some(v) = self.twist {
            cfg.twist = v;
        }
        if let Some(v) = self.max_iters {
            cfg.solver.max_iters = v;
        }
        if let Some(v) = &self.instance {
            cfg.instance_file = Some(v.clone());
        }
        if let Some(v) = self.format {
            cfg.instance_format = v;
        }
        if let Some(v) = &self.out {
            cfg.output.out = Some(v.clone());
        }
    }
}

/// Loads the configuration and applies flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    match &cli.command {
        Command::Sweep { svg_dir: Some(d) } => cfg.output.svg_dir = Some(d.clone()),
        Command::Flow {
            trajectory_dir: Some(d),
        } => cfg.output.trajectory_dir = Some(d.clone()),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    if let Command::Selftest { tol_scale } = cli.command {
        let checks = selftest::run(tol_scale);
        let mut failed = 0;
        for c in &checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            println!(
                "{tag}  {:<42} error {:.3e}  threshold {:.3e}",
                c.name, c.error, c.threshold
            );
            failed += usize::from(!c.passed);
        }
        println!("{} checks, {failed} failed", checks.len());
        return Ok(i32::from(failed > 0));
    }
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Gen { truth_out } => commands::cmd_gen(&cfg, truth_out.as_deref()).map(|_| 0),
        Command::Solve { point_out } => commands::cmd_solve(&cfg, point_out.as_deref()),
        Command::Certify { point } => commands::cmd_certify(&cfg, point).map(|_| 0),
        Command::Sweep { .. } => {
            let (rows, _) = sweep::run_sweep(&cfg)?;
            commands::emit(cfg.output.out.as_deref(), &sweep::sweep_csv(&rows))?;
            if let Some(dir) = &cfg.output.svg_dir {
                std::fs::create_dir_all(dir)?;
                for (name, svg) in svg::sweep_charts(&rows) {
                    std::fs::write(dir.join(name), svg)?;
                }
            }
            Ok(0)
        }
        Command::Flow { .. } => {
            let trials = flow::run_flows(&cfg)?;
            commands::emit(cfg.output.out.as_deref(), &flow::flow_csv(&trials))?;
            if let Some(dir) = &cfg.output.trajectory_dir {
                std::fs::create_dir_all(dir)?;
                for t in &trials {
                    std::fs::write(dir.join(format!("trajectory_{}.csv", t.trial)), &t.trajectory_csv)?;
                }
            }
            Ok(0)
        }
        Command::Selftest { .. } => unreachable!("handled above"),
    }
}
