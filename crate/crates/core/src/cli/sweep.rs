//! Noise sweeps over `(p, sigma, trial)` with per-cell aggregation.

use super::config::ExperimentConfig;
use super::problem::{align_components, config_graph, generate, initial_point, Problem};
use crate::certificate::{certify, correlation, Verdict};
use crate::error::Result;
use crate::field::{Field, Scalar};
use crate::graphs::Graph;
use crate::linalg::mix_seed;
use crate::solver::{solve_from, Init};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::time::Instant;

pub const CSV_HEADER: &str = "sigma,p,corr_mean,rank_r_frac,rank_def_frac,time_mean_s,iters_mean,certified_frac";

/// Outcome of one solve in a sweep. Failed trials carry `None`.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub p_index: usize,
    pub sigma_index: usize,
    pub trial: usize,
    pub outcome: Option<TrialOutcome>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrialOutcome {
    pub correlation: f64,
    pub rank: usize,
    pub time_s: f64,
    pub iterations: usize,
    pub verdict: Verdict,
    pub s_min_eig: f64,
    pub lhat_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub p: usize,
    pub corr_mean: f64,
    pub rank_r_frac: f64,
    pub rank_def_frac: f64,
    pub time_mean_s: f64,
    pub iters_mean: f64,
    pub certified_frac: f64,
}

/// Seed of one sweep cell trial.
pub fn trial_seed(base: u64, p_index: usize, sigma_index: usize, trial: usize) -> u64 {
    mix_seed(base, &[p_index as u64, sigma_index as u64, trial as u64])
}

/// Worker pool capped by the `SYNC_THREADS` environment variable.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SYNC_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => builder = builder.num_threads(k),
            _ => log::warn!("ignoring SYNC_THREADS={v:?}; expected a positive integer"),
        }
    }
    builder
        .build()
        .map_err(|e| crate::error::Error::param(format!("cannot start worker pool: {e}")))
}

fn run_trial<T: Scalar>(
    cfg: &ExperimentConfig,
    graph: &Graph,
    p_index: usize,
    sigma_index: usize,
    trial: usize,
) -> Result<TrialOutcome> {
    let seed = trial_seed(cfg.seed, p_index, sigma_index, trial);
    let p = cfg.p[p_index];
    let inst = generate::<T>(cfg, graph, cfg.sigma[sigma_index], mix_seed(seed, &[0]))?;
    let prob = Problem::generated(&inst);
    let z = prob.truth.as_ref().expect("generated instances know their truth");
    let init = match initial_point(cfg, &prob.lhat, p, mix_seed(seed, &[1]))? {
        Init::Given(y) => Init::Given(align_components(y, z)?),
        other => other,
    };
    let start = Instant::now();
    let report = solve_from(&prob.lhat, p, init, &cfg.solver)?;
    let time_s = start.elapsed().as_secs_f64();
    let cert = certify(&prob.lhat, &report.point, &cfg.certify)?;
    Ok(TrialOutcome {
        correlation: correlation(z, report.point.data()).1,
        rank: cert.numerical_rank,
        time_s,
        iterations: report.iterations,
        verdict: cert.verdict,
        s_min_eig: cert.s_min_eig,
        lhat_norm: cert.lhat_norm,
    })
}

/// Runs every `(p, sigma, trial)` cell on the worker pool. Records come back in
/// cell order regardless of completion order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let graph = config_graph(cfg)?;
    let cells: Vec<(usize, usize, usize)> = (0..cfg.p.len())
        .flat_map(|pi| (0..cfg.sigma.len()).flat_map(move |si| (0..cfg.trials).map(move |t| (pi, si, t))))
        .collect();
    let pool = thread_pool()?;
    let records = pool.install(|| {
        cells
            .par_iter()
            .map(|&(pi, si, t)| {
                let outcome = match cfg.field {
                    Field::Real => run_trial::<f64>(cfg, &graph, pi, si, t),
                    Field::Complex => run_trial::<nalgebra::Complex<f64>>(cfg, &graph, pi, si, t),
                };
                let outcome = outcome
                    .map_err(|e| log::warn!("trial (p index {pi}, sigma index {si}, trial {t}) failed: {e}"))
                    .ok();
                TrialRecord {
                    p_index: pi,
                    sigma_index: si,
                    trial: t,
                    outcome,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(records)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = values.fold((0.0, 0usize), |(s, k), v| (s + v, k + 1));
    if k == 0 {
        f64::NAN
    } else {
        s / k as f64
    }
}

/// Aggregates trial records into one row per `(sigma, p)`, sigma-major.
/// Any failed trial makes the cell's statistics NaN.
pub fn aggregate(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for (si, &sigma) in cfg.sigma.iter().enumerate() {
        for (pi, &p) in cfg.p.iter().enumerate() {
            let cell: Vec<Option<&TrialOutcome>> = records
                .iter()
                .filter(|t| t.p_index == pi && t.sigma_index == si)
                .map(|t| t.outcome.as_ref())
                .collect();
            let stat = |f: &dyn Fn(&TrialOutcome) -> f64| mean(cell.iter().map(|o| o.map_or(f64::NAN, f)));
            let indicator = |b: bool| if b { 1.0 } else { 0.0 };
            rows.push(SweepRow {
                sigma,
                p,
                corr_mean: stat(&|o| o.correlation),
                rank_r_frac: stat(&|o| indicator(o.rank == cfg.r)),
                rank_def_frac: stat(&|o| indicator(o.rank < p)),
                time_mean_s: stat(&|o| o.time_s),
                iters_mean: stat(&|o| o.iterations as f64),
                certified_frac: stat(&|o| indicator(o.verdict == Verdict::CertifiedGlobal)),
            });
        }
    }
    rows
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<(Vec<SweepRow>, Vec<TrialRecord>)> {
    let records = run_trials(cfg)?;
    Ok((aggregate(cfg, &records), records))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.sigma, r.p, r.corr_mean, r.rank_r_frac, r.rank_def_frac, r.time_mean_s, r.iters_mean, r.certified_frac
        );
    }
    s
}
