//! Orthogonal and unitary group synchronization through the rank-`p` Burer-Monteiro
//! relaxation over products of Stiefel manifolds.
//!
//! Given noisy relative measurements `R_ij ~ Z_i Z_j^*` on the edges of a graph, the
//! solver minimizes `<L, Y Y^*>` over `Y` whose `r x p` blocks have orthonormal rows,
//! where `L` is the connection Laplacian. Second-order critical points are checked for
//! global optimality with a dual certificate.
//!
//! - [`graphs`]: graph families and Laplacian spectra.
//! - [`instance`]: ground truth, noise and connection Laplacians; [`io`] reads and
//!   writes measurement files (including planar g2o pose graphs).
//! - [`stiefel`]: the manifold, its tangent spaces and random tangent vectors.
//! - [`solver`]: Riemannian gradient descent with saddle escape.
//! - [`certificate`]: optimality certificates, numerical rank and closed-form bounds.
//! - [`kuramoto`]: the matching oscillator gradient flow.
//! - [`cli`]: the `sync` harness (configs, sweeps, charts).
//!
//! ```
//! use orthosync::certificate::{certify, CertifyOptions, Verdict};
//! use orthosync::graphs::Graph;
//! use orthosync::instance::{NoiseModel, SyncInstance};
//! use orthosync::solver::{solve_from, Init, SolveOptions};
//!
//! let graph = Graph::cycle(12)?;
//! let inst = SyncInstance::<f64>::generate(&graph, 2, NoiseModel::Gaussian { sigma: 0.1 }, 1)?;
//! let lhat = inst.connection_laplacian();
//! let report = solve_from(&lhat, 4, Init::Random, &SolveOptions::default())?;
//! let cert = certify(&lhat, &report.point, &CertifyOptions::default())?;
//! assert_eq!(cert.verdict, Verdict::CertifiedGlobal);
//! # Ok::<(), orthosync::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod block;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod field;
pub mod graphs;
pub mod instance;
pub mod io;
pub mod kuramoto;
pub mod linalg;
pub mod solver;
pub mod stiefel;

pub use error::{Error, Result};
