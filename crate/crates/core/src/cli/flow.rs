//! Batches of Kuramoto flow trajectories.

use super::config::{ExperimentConfig, InitKind};
use super::problem::config_graph;
use super::sweep::thread_pool;
use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::graphs::Graph;
use crate::kuramoto::{integrate_flow, twisted_state, FlowReport, Termination};
use crate::linalg::mix_seed;
use crate::stiefel::StiefelProductPoint;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

pub const CSV_HEADER: &str = "trial,termination,final_sync_error,time_to_sync,steps";

#[derive(Debug, Clone, Serialize)]
pub struct FlowTrial {
    pub trial: usize,
    pub termination: Termination,
    pub final_sync_error: f64,
    pub time_to_sync: Option<f64>,
    pub steps: usize,
    /// Trajectory CSV (`t,sync_error,energy`).
    #[serde(skip)]
    pub trajectory_csv: String,
}

fn summarize<T: Scalar>(trial: usize, rep: &FlowReport<T>) -> FlowTrial {
    FlowTrial {
        trial,
        termination: rep.termination,
        final_sync_error: rep.final_sync_error,
        time_to_sync: rep.time_to_sync(),
        steps: rep.steps,
        trajectory_csv: rep.trajectory_csv(),
    }
}

fn run_one<T: Scalar>(cfg: &ExperimentConfig, graph: &Graph, trial: usize) -> Result<FlowTrial> {
    let p = cfg.p[0];
    let y0 = match cfg.init {
        InitKind::Twisted => {
            let tw = twisted_state(graph.n(), cfg.twist, p)?;
            StiefelProductPoint::from_stacked(tw.data().map(|v| T::from_real(v)), 1)?
        }
        InitKind::Random => StiefelProductPoint::random(graph.n(), cfg.r, p, mix_seed(cfg.seed, &[0xf1, trial as u64])),
        InitKind::Spectral => return Err(Error::param("flow supports random or twisted initialization")),
    };
    let rep = integrate_flow(graph, y0, &cfg.flow)?;
    Ok(summarize(trial, &rep))
}

/// Integrates `trials` trajectories in parallel, returned in trial order.
pub fn run_flows(cfg: &ExperimentConfig) -> Result<Vec<FlowTrial>> {
    cfg.validate()?;
    let graph = config_graph(cfg)?;
    let pool = thread_pool()?;
    pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| match cfg.field {
                Field::Real => run_one::<f64>(cfg, &graph, t),
                Field::Complex => run_one::<nalgebra::Complex<f64>>(cfg, &graph, t),
            })
            .collect()
    })
}

pub fn flow_csv(trials: &[FlowTrial]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for t in trials {
        let termination = serde_json::to_value(t.termination)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        let tts = t.time_to_sync.map_or_else(|| "NaN".to_string(), |v| v.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            t.trial, termination, t.final_sync_error, tts, t.steps
        );
    }
    s
}
