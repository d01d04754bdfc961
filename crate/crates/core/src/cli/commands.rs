//! `gen`, `solve` and `certify`.

use super::config::ExperimentConfig;
use super::problem::{
    align_components, config_graph, generate, initial_point, load_problem, noise_model, AnyProblem, InstanceSummary,
    Problem,
};
use crate::certificate::{certify, correlation, theory_bounds, CertificateReport, TheoryBounds};
use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::instance::{sample_rotations, SyncInstance};
use crate::io::{parse_point, write_edge_measurements, write_g2o, write_point, InstanceFormat};
use crate::linalg::mix_seed;
use crate::solver::{solve_from, SolveStatus, SolveSummary};
use crate::stiefel::StiefelProductPoint;
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Generates an instance and writes it in the configured format; optionally
/// writes the ground truth as a point file (`p = r`).
pub fn cmd_gen(cfg: &ExperimentConfig, truth_out: Option<&Path>) -> Result<()> {
    let graph = config_graph(cfg)?;
    let seed = mix_seed(cfg.seed, &[0x1a]);
    let (text, truth) = match cfg.field {
        Field::Real => {
            let (inst, text) = match cfg.instance_format {
                InstanceFormat::EdgeMeasurements => {
                    let inst = generate::<f64>(cfg, &graph, cfg.sigma[0], seed)?;
                    let text = write_edge_measurements(inst.measurements());
                    (inst, text)
                }
                InstanceFormat::G2o2d => {
                    // g2o angles only describe proper rotations.
                    let truth = sample_rotations(graph.n(), cfg.r, seed);
                    let inst =
                        SyncInstance::with_truth(&graph, truth, noise_model(cfg.sigma[0]), mix_seed(seed, &[1]))?;
                    let text = write_g2o(inst.measurements())?;
                    (inst, text)
                }
            };
            (
                text,
                write_point(&StiefelProductPoint::from_stacked(inst.truth_stacked(), cfg.r)?),
            )
        }
        Field::Complex => {
            if cfg.instance_format == InstanceFormat::G2o2d {
                return Err(Error::param("g2o output is real-only"));
            }
            let inst = generate::<nalgebra::Complex<f64>>(cfg, &graph, cfg.sigma[0], seed)?;
            (
                write_edge_measurements(inst.measurements()),
                write_point(&StiefelProductPoint::from_stacked(inst.truth_stacked(), cfg.r)?),
            )
        }
    };
    emit(cfg.output.out.as_deref(), &text)?;
    if let Some(path) = truth_out {
        emit(Some(path), &truth)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub certificate: CertificateReport,
    /// Normalized correlation with the ground truth, when known.
    pub correlation: Option<f64>,
    pub correlation_raw: Option<f64>,
    /// Landscape bounds from the measured noise norm, when known.
    pub bounds: Option<TheoryBounds>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub instance: InstanceSummary,
    pub p: usize,
    pub solve: SolveSummary,
    pub time_s: f64,
    #[serde(flatten)]
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyOutput {
    pub instance: InstanceSummary,
    pub p: usize,
    #[serde(flatten)]
    pub evaluation: Evaluation,
}

fn evaluate<T: Scalar>(
    cfg: &ExperimentConfig,
    prob: &Problem<T>,
    lambda2: f64,
    y: &StiefelProductPoint<T>,
) -> Result<Evaluation> {
    let certificate = certify(&prob.lhat, y, &cfg.certify)?;
    let corr = prob.truth.as_ref().map(|z| correlation(z, y.data()));
    let bounds = match prob.delta_norm {
        Some(d) if lambda2 > 0.0 => Some(theory_bounds(y.p(), y.r(), y.n(), lambda2, d)?),
        _ => None,
    };
    Ok(Evaluation {
        certificate,
        correlation: corr.map(|c| c.1),
        correlation_raw: corr.map(|c| c.0),
        bounds,
    })
}

/// Exit status of a solve: 0 for a second-order critical point, 2 for an
/// exhausted iteration budget, 3 for a numerical failure.
pub fn status_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::SocPoint => 0,
        SolveStatus::MaxIters => 2,
        SolveStatus::NumericalFailure => 3,
    }
}

fn solve_problem<T: Scalar>(cfg: &ExperimentConfig, prob: &Problem<T>, point_out: Option<&Path>) -> Result<i32> {
    let p = cfg.p[0];
    let (instance, lap) = prob.summary()?;
    let mut init = initial_point(cfg, &prob.lhat, p, mix_seed(cfg.seed, &[0x1b]))?;
    if let (crate::solver::Init::Given(y), Some(z)) = (&init, &prob.truth) {
        init = crate::solver::Init::Given(align_components(y.clone(), z)?);
    }
    let start = Instant::now();
    let report = solve_from(&prob.lhat, p, init, &cfg.solver)?;
    let time_s = start.elapsed().as_secs_f64();
    let evaluation = evaluate(cfg, prob, lap.lambda2, &report.point)?;
    let out = SolveOutput {
        instance,
        p,
        solve: report.summary(),
        time_s,
        evaluation,
    };
    emit(cfg.output.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))?;
    if let Some(path) = point_out {
        emit(Some(path), &write_point(&report.point))?;
    }
    Ok(status_code(report.status))
}

pub fn cmd_solve(cfg: &ExperimentConfig, point_out: Option<&Path>) -> Result<i32> {
    match load_problem(cfg)? {
        AnyProblem::Real(prob) => solve_problem(cfg, &prob, point_out),
        AnyProblem::Complex(prob) => solve_problem(cfg, &prob, point_out),
    }
}

fn certify_problem<T: Scalar>(cfg: &ExperimentConfig, prob: &Problem<T>, point_text: &str) -> Result<()> {
    let y: StiefelProductPoint<T> = parse_point(point_text)?;
    if y.n() != prob.lhat.n() || y.r() != prob.lhat.r() {
        return Err(Error::param(format!(
            "point has n = {}, r = {} but the instance has n = {}, r = {}",
            y.n(),
            y.r(),
            prob.lhat.n(),
            prob.lhat.r()
        )));
    }
    let (instance, lap) = prob.summary()?;
    let evaluation = evaluate(cfg, prob, lap.lambda2, &y)?;
    let out = CertifyOutput {
        instance,
        p: y.p(),
        evaluation,
    };
    emit(cfg.output.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))
}

pub fn cmd_certify(cfg: &ExperimentConfig, point: &Path) -> Result<()> {
    let text = crate::error::read_file(point)?;
    match load_problem(cfg)? {
        AnyProblem::Real(prob) => certify_problem(cfg, &prob, &text),
        AnyProblem::Complex(prob) => certify_problem(cfg, &prob, &text),
    }
}
