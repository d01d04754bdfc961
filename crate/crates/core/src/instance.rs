//! Synchronization instances: ground truth, noisy relative measurements and the
//! graph connection Laplacian built from them.

use crate::block::BlockSymmetricMatrix;
use crate::error::{Error, Result};
use crate::field::{gaussian_matrix, Scalar};
use crate::graphs::Graph;
use crate::linalg::seeded_rng;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Relative measurements `R_ij` on the edges of a graph.
///
/// Only the `i < j` orientation is stored, aligned with [`Graph::edges`]; the
/// reverse orientation is the adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements<T: Scalar> {
    graph: Graph,
    r: usize,
    blocks: Vec<DMatrix<T>>,
}

impl<T: Scalar> Measurements<T> {
    pub fn new(graph: Graph, r: usize, blocks: Vec<DMatrix<T>>) -> Result<Self> {
        if r == 0 {
            return Err(Error::param("block size r must be positive"));
        }
        if blocks.len() != graph.num_edges() {
            return Err(Error::param(format!(
                "{} measurement blocks for {} edges",
                blocks.len(),
                graph.num_edges()
            )));
        }
        if let Some(k) = blocks.iter().position(|b| b.shape() != (r, r)) {
            return Err(Error::param(format!("measurement {k} is not {r} x {r}")));
        }
        Ok(Self { graph, r, blocks })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Blocks `R_ij` (`i < j`) in edge order.
    pub fn blocks(&self) -> &[DMatrix<T>] {
        &self.blocks
    }

    /// `R_ij` in either orientation, or `None` for a non-edge.
    pub fn get(&self, i: usize, j: usize) -> Option<DMatrix<T>> {
        let k = self.graph.edge_index(i, j)?;
        if i < j {
            Some(self.blocks[k].clone())
        } else {
            Some(self.blocks[k].adjoint())
        }
    }

    /// Graph connection Laplacian: `deg(i) I_r` on the diagonal, `-w_ij R_ij` on edges.
    pub fn connection_laplacian(&self) -> BlockSymmetricMatrix<T> {
        let r = self.r;
        let diag = (0..self.n())
            .map(|i| DMatrix::identity(r, r) * T::from_real(self.graph.weighted_degree(i)))
            .collect();
        let off = self
            .graph
            .edges()
            .iter()
            .zip(&self.blocks)
            .map(|(e, b)| (e.i, e.j, b * T::from_real(-e.w)));
        BlockSymmetricMatrix::from_blocks(self.n(), r, diag, off).expect("consistent by construction")
    }
}

/// Noise added to every measured block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    /// Entries i.i.d. `N(0, sigma^2)`; complex entries split the variance evenly
    /// between real and imaginary parts.
    Gaussian {
        sigma: f64,
    },
}

/// Haar-distributed element of O(r) or U(r) per vertex.
///
/// A Gaussian matrix is orthonormalized by QR and the columns of `Q` are rescaled by
/// the phases of `diag(R)`, which makes the law exactly Haar.
pub fn sample_ground_truth<T: Scalar>(n: usize, r: usize, seed: u64) -> Vec<DMatrix<T>> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| haar_unitary(r, &mut rng)).collect()
}

/// Haar-distributed rotations in SO(r): [`sample_ground_truth`] with the first row of
/// each reflection negated.
pub fn sample_rotations(n: usize, r: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut blocks = sample_ground_truth::<f64>(n, r, seed);
    for b in &mut blocks {
        if b.determinant() < 0.0 {
            b.row_mut(0).neg_mut();
        }
    }
    blocks
}

pub(crate) fn haar_unitary<T: Scalar, R: rand::Rng + ?Sized>(r: usize, rng: &mut R) -> DMatrix<T> {
    let g: DMatrix<T> = gaussian_matrix(r, r, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for k in 0..r {
        let d = rr[(k, k)];
        let m = d.modulus();
        let phase = if m > 0.0 { d * T::from_real(1.0 / m) } else { T::one() };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Measurements `R_ij = Z_i Z_j^* + Delta_ij` on every edge, and the noise blocks `Delta_ij`.
pub fn make_measurements<T: Scalar>(
    truth: &[DMatrix<T>],
    graph: &Graph,
    noise: NoiseModel,
    seed: u64,
) -> Result<(Measurements<T>, Vec<DMatrix<T>>)> {
    if truth.len() != graph.n() {
        return Err(Error::param(format!(
            "{} ground-truth blocks for {} vertices",
            truth.len(),
            graph.n()
        )));
    }
    let r = truth.first().map(|z| z.nrows()).unwrap_or(0);
    if truth.iter().any(|z| z.shape() != (r, r)) {
        return Err(Error::param("ground-truth blocks must all be square of the same size"));
    }
    let sigma = match noise {
        NoiseModel::None => 0.0,
        NoiseModel::Gaussian { sigma } if sigma >= 0.0 && sigma.is_finite() => sigma,
        NoiseModel::Gaussian { sigma } => {
            return Err(Error::param(format!("noise level must be non-negative, got {sigma}")))
        }
    };
    let mut rng = seeded_rng(seed);
    let mut blocks = Vec::with_capacity(graph.num_edges());
    let mut deltas = Vec::with_capacity(graph.num_edges());
    for e in graph.edges() {
        let clean = &truth[e.i] * truth[e.j].adjoint();
        let delta = if sigma > 0.0 {
            gaussian_matrix::<T, _>(r, r, &mut rng) * T::from_real(sigma)
        } else {
            DMatrix::zeros(r, r)
        };
        blocks.push(clean + &delta);
        deltas.push(delta);
    }
    Ok((Measurements::new(graph.clone(), r, blocks)?, deltas))
}

/// A generated instance with known ground truth and noise.
#[derive(Debug, Clone)]
pub struct SyncInstance<T: Scalar> {
    measurements: Measurements<T>,
    truth: Vec<DMatrix<T>>,
    noise: Vec<DMatrix<T>>,
}

impl<T: Scalar> SyncInstance<T> {
    /// Samples Haar ground truth and noisy measurements. Truth and noise use
    /// independent streams derived from `seed`.
    pub fn generate(graph: &Graph, r: usize, noise: NoiseModel, seed: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::param("block size r must be positive"));
        }
        let truth = sample_ground_truth(graph.n(), r, crate::linalg::mix_seed(seed, &[1]));
        Self::with_truth(graph, truth, noise, crate::linalg::mix_seed(seed, &[2]))
    }

    pub fn with_truth(graph: &Graph, truth: Vec<DMatrix<T>>, noise: NoiseModel, seed: u64) -> Result<Self> {
        let (measurements, noise) = make_measurements(&truth, graph, noise, seed)?;
        Ok(Self {
            measurements,
            truth,
            noise,
        })
    }

    pub fn measurements(&self) -> &Measurements<T> {
        &self.measurements
    }

    pub fn graph(&self) -> &Graph {
        self.measurements.graph()
    }

    pub fn n(&self) -> usize {
        self.measurements.n()
    }

    pub fn r(&self) -> usize {
        self.measurements.r()
    }

    pub fn truth(&self) -> &[DMatrix<T>] {
        &self.truth
    }

    /// Ground truth stacked as an `rn x r` matrix.
    pub fn truth_stacked(&self) -> DMatrix<T> {
        stack_blocks(&self.truth)
    }

    /// Raw noise blocks `Delta_ij` (`i < j`) in edge order.
    pub fn noise_blocks(&self) -> &[DMatrix<T>] {
        &self.noise
    }

    /// The noise matrix entering the connection Laplacian: blocks `w_ij Delta_ij`
    /// (plain `Delta_ij` for unit weights), zero elsewhere.
    pub fn noise_matrix(&self) -> BlockSymmetricMatrix<T> {
        let (n, r) = (self.n(), self.r());
        let off = self
            .graph()
            .edges()
            .iter()
            .zip(&self.noise)
            .map(|(e, d)| (e.i, e.j, d * T::from_real(e.w)));
        BlockSymmetricMatrix::from_blocks(n, r, vec![DMatrix::zeros(r, r); n], off).expect("consistent by construction")
    }

    pub fn connection_laplacian(&self) -> BlockSymmetricMatrix<T> {
        self.measurements.connection_laplacian()
    }

    /// `D (L kron I_r) D^*` with `D = diag(Z_1, ..., Z_n)`.
    pub fn clean_laplacian(&self) -> BlockSymmetricMatrix<T> {
        let r = self.r();
        let g = self.graph();
        let diag = (0..self.n())
            .map(|i| DMatrix::identity(r, r) * T::from_real(g.weighted_degree(i)))
            .collect();
        let off = g.edges().iter().map(|e| {
            (
                e.i,
                e.j,
                &self.truth[e.i] * self.truth[e.j].adjoint() * T::from_real(-e.w),
            )
        });
        BlockSymmetricMatrix::from_blocks(self.n(), r, diag, off).expect("consistent by construction")
    }

    /// The same problem after the change of variables `Y_i -> Z_i^* Y_i`: identity
    /// ground truth and noise `Z_i^* Delta_ij Z_j`.
    pub fn with_identity_truth(&self) -> Self {
        let r = self.r();
        let g = self.graph().clone();
        let noise: Vec<DMatrix<T>> = g
            .edges()
            .iter()
            .zip(&self.noise)
            .map(|(e, d)| self.truth[e.i].adjoint() * d * &self.truth[e.j])
            .collect();
        let blocks = noise.iter().map(|d| DMatrix::identity(r, r) + d).collect();
        Self {
            measurements: Measurements::new(g, r, blocks).expect("consistent by construction"),
            truth: vec![DMatrix::identity(r, r); self.n()],
            noise,
        }
    }
}

/// Largest singular value of a (Hermitian) noise matrix.
pub fn noise_operator_norm<T: Scalar>(delta: &BlockSymmetricMatrix<T>) -> f64 {
    delta.op_norm()
}

/// Stacks `r x c` blocks vertically.
pub fn stack_blocks<T: Scalar>(blocks: &[DMatrix<T>]) -> DMatrix<T> {
    let r = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let c = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let mut out = DMatrix::zeros(r * blocks.len(), c);
    for (i, b) in blocks.iter().enumerate() {
        out.rows_mut(i * r, r).copy_from(b);
    }
    out
}
