//! JSON experiment configuration shared by all subcommands.

use crate::certificate::CertifyOptions;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::graphs::GraphSpec;
use crate::io::InstanceFormat;
use crate::kuramoto::FlowOptions;
use crate::solver::SolveOptions;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Random,
    Spectral,
    /// Twisted state with winding number `twist` (real field, `r = 1`).
    Twisted,
}

impl std::str::FromStr for InitKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" => Ok(Self::Random),
            "spectral" => Ok(Self::Spectral),
            "twisted" => Ok(Self::Twisted),
            other => Err(format!("unknown init `{other}` (expected random, spectral or twisted)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// Main output: instance file (gen), JSON report (solve, certify) or CSV (sweep, flow).
    pub out: Option<PathBuf>,
    /// Directory for SVG charts (sweep).
    pub svg_dir: Option<PathBuf>,
    /// Directory for per-trial trajectory CSVs (flow).
    pub trajectory_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    /// Measurement file. Solve and certify use its measurements; gen, sweep and flow use only its graph.
    pub instance_file: Option<PathBuf>,
    pub instance_format: InstanceFormat,
    pub r: usize,
    pub field: Field,
    pub p: Vec<usize>,
    pub sigma: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub init: InitKind,
    pub twist: usize,
    pub solver: SolveOptions,
    pub certify: CertifyOptions,
    pub flow: FlowOptions,
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            graph: GraphSpec::Circulant { n: 100, degree: 10 },
            instance_file: None,
            instance_format: InstanceFormat::EdgeMeasurements,
            r: 2,
            field: Field::Real,
            p: vec![4],
            sigma: vec![0.0],
            trials: 1,
            seed: 0,
            init: InitKind::Random,
            twist: 1,
            solver: SolveOptions::default(),
            certify: CertifyOptions::default(),
            flow: FlowOptions::default(),
            output: OutputPaths::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::error::read_file(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::param("r must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        if self.p.is_empty() || self.sigma.is_empty() {
            return Err(Error::param("p and sigma lists must be non-empty"));
        }
        if let Some(p) = self.p.iter().find(|p| **p < self.r) {
            return Err(Error::param(format!("p = {p} is smaller than r = {}", self.r)));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(**s >= 0.0)) {
            return Err(Error::param(format!("sigma = {s} must be non-negative")));
        }
        if self.init == InitKind::Twisted && (self.r != 1 || self.field != Field::Real) {
            return Err(Error::param("twisted initialization needs r = 1 over the reals"));
        }
        self.solver.validate()
    }
}
