//! Solvers for lq minimization (`0 < q <= 1`) and the exhaustive l0 oracle.
//!
//! [`irls_lq`] solves `min ||x||_q^q s.t. Ax = y` and [`irls_lq_denoise`]
//! solves `min ||x||_q^q s.t. ||Ax - y||_2 <= eta`, both by iteratively
//! reweighted least squares with a shrinking smoothing parameter. Both return
//! local minimizers; global lq minimization is NP-hard.

mod irls;
mod l0;
mod probe;

pub use irls::{irls_lq, irls_lq_denoise};
pub use l0::{l0_oracle, l0_oracle_with_budget, L0Solution};
pub use probe::{null_space_basis, null_space_probe, ProbeReport};

use serde::{Deserialize, Serialize};

use crate::dense::DenseVector;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Number of inner loops (one per smoothing level, more at the floor).
    pub max_outer: usize,
    /// Reweighting steps per inner loop.
    pub max_inner: usize,
    pub eps0: f64,
    pub eps_decay: f64,
    pub eps_floor: f64,
    pub step_tol: f64,
    /// Above the floor an inner loop also counts as stalled once its step
    /// drops below `stall_ratio * eps`.
    pub stall_ratio: f64,
    /// Relative size of the seeded perturbation applied to the first set of
    /// weights. Breaks exact symmetries of the starting point.
    pub weight_jitter: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_outer: 40,
            max_inner: 100,
            eps0: 1.0,
            eps_decay: 0.5,
            eps_floor: 1e-9,
            step_tol: 1e-10,
            stall_ratio: 1e-2,
            weight_jitter: 1e-3,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps0", self.eps0),
            ("eps_floor", self.eps_floor),
            ("step_tol", self.step_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::domain("max_outer and max_inner must be at least 1"));
        }
        if !(self.eps_decay > 0.0 && self.eps_decay < 1.0) {
            return Err(Error::domain(format!(
                "eps_decay must lie in (0, 1), got {}",
                self.eps_decay
            )));
        }
        if !(self.stall_ratio >= 0.0) || !(self.weight_jitter >= 0.0 && self.weight_jitter < 1.0) {
            return Err(Error::domain("stall_ratio must be >= 0 and weight_jitter in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverResult {
    pub x_hat: DenseVector,
    /// `||x_hat||_q^q`.
    pub objective: f64,
    /// `||A x_hat - y||_2`.
    pub residual2: f64,
    /// `||A^T (A x_hat - y)||_inf`, for confronting the Dantzig-model bound.
    pub correlation_residual: f64,
    /// Total reweighting steps.
    pub iterations: usize,
    pub eps_final: f64,
    pub converged: bool,
    /// Objective at the start and at every change of the smoothing level.
    pub objective_trace: Vec<f64>,
    /// Penalty weight selected by the noisy solver.
    pub lambda: Option<f64>,
    /// Set when `x_hat = 0` is returned because the constraint admits it.
    pub degenerate: bool,
}
