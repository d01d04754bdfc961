//! Kuramoto-type gradient flow on `St(r, p)^n`:
//! `dY_i/dt = -P_{Y_i}(sum_j w_ij (Y_i - Y_j))`.

use crate::block::BlockSymmetricMatrix;
use crate::error::{Error, Result};
use crate::field::{hermitian_part, Scalar};
use crate::graphs::Graph;
use crate::linalg::fro;
use crate::stiefel::{StiefelProductPoint, TangentVector};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Connection Laplacian of the graph with identity measurements, `L kron I_r`.
pub fn identity_laplacian<T: Scalar>(graph: &Graph, r: usize) -> BlockSymmetricMatrix<T> {
    let diag = (0..graph.n())
        .map(|i| DMatrix::identity(r, r) * T::from_real(graph.weighted_degree(i)))
        .collect();
    let off = graph
        .edges()
        .iter()
        .map(|e| (e.i, e.j, DMatrix::identity(r, r) * T::from_real(-e.w)));
    BlockSymmetricMatrix::from_blocks(graph.n(), r, diag, off).expect("consistent by construction")
}

/// Right-hand side of the flow at a point. Equals `-1/2` times the Riemannian
/// gradient of `<L kron I, Y Y^*>`.
pub fn flow_rhs<T: Scalar>(graph: &Graph, y: &StiefelProductPoint<T>) -> TangentVector<T> {
    rhs_ambient(graph, y.data(), y.r())
}

// The same formula on an arbitrary stacked matrix, used for the Runge-Kutta stages.
fn rhs_ambient<T: Scalar>(graph: &Graph, y: &DMatrix<T>, r: usize) -> DMatrix<T> {
    let mut out = DMatrix::zeros(y.nrows(), y.ncols());
    for i in 0..graph.n() {
        let yi = y.rows(i * r, r);
        let mut force = DMatrix::<T>::zeros(r, y.ncols());
        for &(j, w, _) in graph.neighbors(i) {
            force += (yi - y.rows(j * r, r)) * T::from_real(w);
        }
        let s = hermitian_part(&(&force * yi.adjoint()));
        let projected = force - s * yi;
        out.rows_mut(i * r, r).copy_from(&(-projected));
    }
    out
}

/// `sum_{ij in E} w_ij ||Y_i - Y_j||_F^2`.
pub fn energy<T: Scalar>(graph: &Graph, y: &StiefelProductPoint<T>) -> f64 {
    let r = y.r();
    graph
        .edges()
        .iter()
        .map(|e| e.w * (y.data().rows(e.i * r, r) - y.data().rows(e.j * r, r)).norm_squared())
        .sum()
}

/// `r - ||mean_i Y_i||_F^2`: zero exactly when all blocks coincide.
pub fn sync_error<T: Scalar>(y: &StiefelProductPoint<T>) -> f64 {
    let (n, r) = (y.n(), y.r());
    let mut mean = DMatrix::<T>::zeros(r, y.p());
    for i in 0..n {
        mean += y.block(i);
    }
    mean /= T::from_real(n as f64);
    (r as f64 - mean.norm_squared()).max(0.0)
}

/// Point on `St(1, p)^n` with block `i` at angle `2 pi q i / n` in the first two coordinates.
pub fn twisted_state(n: usize, q: usize, p: usize) -> Result<StiefelProductPoint<f64>> {
    if p < 2 {
        return Err(Error::param("twisted states need p >= 2"));
    }
    if q == 0 || q >= n {
        return Err(Error::param(format!(
            "winding number must satisfy 1 <= q < n, got q = {q}, n = {n}"
        )));
    }
    let mut data = DMatrix::zeros(n, p);
    for i in 0..n {
        let theta = 2.0 * std::f64::consts::PI * (q * i) as f64 / n as f64;
        data[(i, 0)] = theta.cos();
        data[(i, 1)] = theta.sin();
    }
    StiefelProductPoint::from_stacked(data, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Synchronized,
    EquilibriumNonsync,
    TimeBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowOptions {
    /// Time step; `None` means `0.1 / max_degree`.
    pub dt: Option<f64>,
    pub t_max: f64,
    pub sync_tol: f64,
    /// Equilibrium threshold on the RHS norm; `None` means `1e-10 * max_degree`.
    pub rhs_tol: Option<f64>,
    /// Record a trajectory sample every this many steps (the endpoints are always kept).
    pub sample_every: usize,
    pub max_halvings: u32,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: 1e3,
            sync_tol: 1e-10,
            rhs_tol: None,
            sample_every: 10,
            max_halvings: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub sync_error: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct FlowReport<T: Scalar> {
    pub point: StiefelProductPoint<T>,
    pub trajectory: Vec<FlowSample>,
    pub termination: Termination,
    pub steps: usize,
    pub final_time: f64,
    pub final_sync_error: f64,
    pub final_rhs_norm: f64,
}

impl<T: Scalar> FlowReport<T> {
    /// Time at which the run was classified as synchronized.
    pub fn time_to_sync(&self) -> Option<f64> {
        (self.termination == Termination::Synchronized).then_some(self.final_time)
    }

    /// Trajectory as CSV with header `t,sync_error,energy`.
    pub fn trajectory_csv(&self) -> String {
        let mut s = String::from("t,sync_error,energy\n");
        for x in &self.trajectory {
            let _ = writeln!(s, "{:?},{:?},{:?}", x.t, x.sync_error, x.energy);
        }
        s
    }
}

/// Classical fourth-order Runge-Kutta with polar re-projection after every step.
///
/// A step that increases the energy is retried with half the step size, up to
/// `max_halvings` times.
pub fn integrate_flow<T: Scalar>(
    graph: &Graph,
    y0: StiefelProductPoint<T>,
    opts: &FlowOptions,
) -> Result<FlowReport<T>> {
    if y0.n() != graph.n() {
        return Err(Error::param("initial point does not match the graph"));
    }
    let max_degree = graph.max_weighted_degree();
    let dt0 = match opts.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::param(format!("time step must be positive, got {dt}"))),
        None if max_degree > 0.0 => 0.1 / max_degree,
        None => 0.1,
    };
    let rhs_tol = opts.rhs_tol.unwrap_or(1e-10 * max_degree);
    let r = y0.r();
    let lap = identity_laplacian::<T>(graph, r);
    // Energy differences below this are rounding in the re-projection.
    let slack = 1e-13 * max_degree.max(1.0) * (graph.n() * r) as f64;

    let mut y = y0;
    let mut t = 0.0;
    let mut steps = 0;
    let mut e = energy(graph, &y);
    let mut trajectory = Vec::new();

    loop {
        let err = sync_error(&y);
        let rhs = flow_rhs(graph, &y);
        let rhs_norm = fro(&rhs);
        let termination = if err <= opts.sync_tol {
            Some(Termination::Synchronized)
        } else if rhs_norm <= rhs_tol {
            Some(Termination::EquilibriumNonsync)
        } else if t >= opts.t_max {
            Some(Termination::TimeBudget)
        } else {
            None
        };
        if steps % opts.sample_every.max(1) == 0 || termination.is_some() {
            trajectory.push(FlowSample {
                t,
                sync_error: err,
                energy: e,
            });
        }
        if let Some(termination) = termination {
            return Ok(FlowReport {
                point: y,
                trajectory,
                termination,
                steps,
                final_time: t,
                final_sync_error: err,
                final_rhs_norm: rhs_norm,
            });
        }

        let mut dt = dt0.min(opts.t_max - t).max(f64::MIN_POSITIVE);
        let mut halvings = 0;
        loop {
            let next = rk4_step(graph, &y, &rhs, dt)?;
            // The energy is the objective with identity measurements.
            let change = crate::solver::objective_change(&lap, &y, &next);
            if change <= slack {
                y = next;
                e = (e + change).max(0.0);
                t += dt;
                break;
            }
            halvings += 1;
            if halvings > opts.max_halvings {
                return Err(Error::numerical(
                    format!("energy increased at t = {t} even with step {dt:e}"),
                    steps,
                ));
            }
            dt *= 0.5;
        }
        steps += 1;
        if steps % 1000 == 0 {
            // Re-anchor the running energy against accumulated rounding.
            e = energy(graph, &y);
        }
    }
}

fn rk4_step<T: Scalar>(
    graph: &Graph,
    y: &StiefelProductPoint<T>,
    k1: &DMatrix<T>,
    dt: f64,
) -> Result<StiefelProductPoint<T>> {
    let r = y.r();
    let y0 = y.data();
    let h = T::from_real(dt);
    let half = T::from_real(0.5 * dt);
    let k2 = rhs_ambient(graph, &(y0 + k1 * half), r);
    let k3 = rhs_ambient(graph, &(y0 + &k2 * half), r);
    let k4 = rhs_ambient(graph, &(y0 + &k3 * h), r);
    let incr = (k1 + (k2 + k3) * T::from_real(2.0) + k4) * T::from_real(dt / 6.0);
    StiefelProductPoint::project_stacked(y0 + incr, r)
}

/// `||rhs + gradient / 2||_F` for the identity-measurement objective; zero up to
/// rounding, since the flow is a rescaled gradient flow.
pub fn rhs_gradient_gap<T: Scalar>(graph: &Graph, y: &StiefelProductPoint<T>) -> f64 {
    let lap = identity_laplacian::<T>(graph, y.r());
    let g = crate::solver::gradient(&lap, y);
    let rhs = flow_rhs(graph, y);
    fro(&(rhs + g * T::from_real(0.5)))
}

/// Angular velocity of the classical rule `theta_i' = -sum_j w_ij sin(theta_i - theta_j)`.
pub fn classical_angular_rate(graph: &Graph, theta: &[f64], i: usize) -> f64 {
    -graph
        .neighbors(i)
        .iter()
        .map(|&(j, w, _)| w * (theta[i] - theta[j]).sin())
        .sum::<f64>()
}
