//! Turning a configuration into a concrete problem instance.

use super::config::{ExperimentConfig, InitKind};
use crate::block::BlockSymmetricMatrix;
use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::graphs::{build_graph, Graph, LaplacianSummary};
use crate::instance::{noise_operator_norm, Measurements, NoiseModel, SyncInstance};
use crate::io::{parse_instance, AnyMeasurements};
use crate::kuramoto::twisted_state;
use crate::linalg::mix_seed;
use crate::solver::{spectral_init, Init};
use crate::stiefel::StiefelProductPoint;
use nalgebra::DMatrix;
use serde::Serialize;

/// A connection Laplacian together with whatever is known about its origin.
pub struct Problem<T: Scalar> {
    pub graph: Graph,
    pub lhat: BlockSymmetricMatrix<T>,
    /// Ground truth stacked `rn x r`, for generated instances.
    pub truth: Option<DMatrix<T>>,
    pub delta_norm: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub r: usize,
    pub field: Field,
    pub edges: usize,
    pub lambda2: f64,
    pub lambda_max: f64,
    pub connected: bool,
    pub lhat_norm: f64,
    pub delta_norm: Option<f64>,
}

impl<T: Scalar> Problem<T> {
    pub fn generated(inst: &SyncInstance<T>) -> Self {
        Self {
            graph: inst.graph().clone(),
            lhat: inst.connection_laplacian(),
            truth: Some(inst.truth_stacked()),
            delta_norm: Some(noise_operator_norm(&inst.noise_matrix())),
        }
    }

    pub fn from_measurements(m: &Measurements<T>) -> Self {
        Self {
            graph: m.graph().clone(),
            lhat: m.connection_laplacian(),
            truth: None,
            delta_norm: None,
        }
    }

    pub fn summary(&self) -> Result<(InstanceSummary, LaplacianSummary)> {
        let lap = self.graph.laplacian_summary()?;
        Ok((
            InstanceSummary {
                n: self.lhat.n(),
                r: self.lhat.r(),
                field: T::FIELD,
                edges: self.graph.num_edges(),
                lambda2: lap.lambda2,
                lambda_max: lap.lambda_max,
                connected: lap.connected,
                lhat_norm: self.lhat.op_norm(),
                delta_norm: self.delta_norm,
            },
            lap,
        ))
    }
}

pub fn noise_model(sigma: f64) -> NoiseModel {
    if sigma == 0.0 {
        NoiseModel::None
    } else {
        NoiseModel::Gaussian { sigma }
    }
}

/// Generates the instance described by the config (first sigma) with the given seed.
pub fn generate<T: Scalar>(cfg: &ExperimentConfig, graph: &Graph, sigma: f64, seed: u64) -> Result<SyncInstance<T>> {
    SyncInstance::generate(graph, cfg.r, noise_model(sigma), seed)
}

/// Graph of the experiment. When an instance file is configured only its topology is
/// used here, so sweeps and flows can run synthetic noise on a real pose graph.
pub fn config_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    if let Some(path) = &cfg.instance_file {
        return Ok(parse_instance(path, cfg.instance_format)?.measurements.graph().clone());
    }
    build_graph(&cfg.graph, mix_seed(cfg.seed, &[0x6a]))
}

/// Either a loaded measurement file or a generated instance, with the field it lives in.
pub enum AnyProblem {
    Real(Problem<f64>),
    Complex(Problem<nalgebra::Complex<f64>>),
}

pub fn load_problem(cfg: &ExperimentConfig) -> Result<AnyProblem> {
    if let Some(path) = &cfg.instance_file {
        let parsed = parse_instance(path, cfg.instance_format)?;
        return Ok(match parsed.measurements {
            AnyMeasurements::Real(m) => AnyProblem::Real(Problem::from_measurements(&m)),
            AnyMeasurements::Complex(m) => AnyProblem::Complex(Problem::from_measurements(&m)),
        });
    }
    let graph = config_graph(cfg)?;
    let sigma = cfg.sigma[0];
    let seed = mix_seed(cfg.seed, &[0x1a]);
    Ok(match cfg.field {
        Field::Real => AnyProblem::Real(Problem::generated(&generate::<f64>(cfg, &graph, sigma, seed)?)),
        Field::Complex => AnyProblem::Complex(Problem::generated(&generate(cfg, &graph, sigma, seed)?)),
    })
}

/// Initial point for a solve.
pub fn initial_point<T: Scalar>(
    cfg: &ExperimentConfig,
    lhat: &BlockSymmetricMatrix<T>,
    p: usize,
    seed: u64,
) -> Result<Init<T>> {
    Ok(match cfg.init {
        InitKind::Random => Init::Given(StiefelProductPoint::random(lhat.n(), lhat.r(), p, seed)),
        InitKind::Spectral => Init::Given(spectral_init(lhat, p)?),
        InitKind::Twisted => {
            if T::FIELD != Field::Real || lhat.r() != 1 {
                return Err(Error::param("twisted initialization needs r = 1 over the reals"));
            }
            let tw = twisted_state(lhat.n(), cfg.twist, p)?;
            let data = tw.data().map(|v| T::from_real(v));
            Init::Given(StiefelProductPoint::from_stacked(data, 1)?)
        }
    })
}

/// For `p = r` over the reals, flips one row of each block whose determinant sign
/// differs from the ground truth's, so the start lies in the same component of `O(r)^n`.
pub fn align_components<T: Scalar>(y: StiefelProductPoint<T>, truth: &DMatrix<T>) -> Result<StiefelProductPoint<T>> {
    let (r, p) = (y.r(), y.p());
    if T::FIELD != Field::Real || p != r {
        return Ok(y);
    }
    let mut data = y.into_data();
    for i in 0..data.nrows() / r {
        let dy = data.rows(i * r, r).into_owned().determinant().re();
        let dz = truth.rows(i * r, r).into_owned().determinant().re();
        if dy * dz < 0.0 {
            let mut row = data.row_mut(i * r);
            row.neg_mut();
        }
    }
    StiefelProductPoint::from_stacked(data, r)
}
