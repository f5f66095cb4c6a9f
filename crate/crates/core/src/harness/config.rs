use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ensemble::{MatrixEnsemble, SignalDistribution};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::solver::SolverOptions;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NoiseSpec {
    None,
    /// Noise of l2 norm exactly `eps`; the solver constraint radius is `eta`.
    L2Ball { eta: f64, eps: f64 },
}

impl NoiseSpec {
    /// `(eps, eta)`; both zero when noiseless.
    pub fn levels(&self) -> (f64, f64) {
        match *self {
            NoiseSpec::None => (0.0, 0.0),
            NoiseSpec::L2Ball { eta, eps } => (eps, eta),
        }
    }
}

fn default_rtol() -> f64 {
    1e-4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub k_grid: Vec<usize>,
    pub q_grid: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub noise: NoiseSpec,
    #[serde(default = "default_rtol")]
    pub success_rtol: f64,
    pub matrix_ensemble: MatrixEnsemble,
    #[serde(default)]
    pub signal: SignalDistribution,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::domain("n and p must be positive"));
        }
        if self.k_grid.is_empty() || self.q_grid.is_empty() {
            return Err(Error::domain("k_grid and q_grid must be non-empty"));
        }
        if let Some(k) = self.k_grid.iter().find(|&&k| k == 0 || k >= self.n || k > self.p) {
            return Err(Error::domain(format!(
                "every k must satisfy 1 <= k < n = {}, got {k}",
                self.n
            )));
        }
        if let Some(q) = self.q_grid.iter().find(|q| !(**q > 0.0 && **q <= 1.0)) {
            return Err(Error::domain(format!("every q must lie in (0, 1], got {q}")));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if !(self.success_rtol > 0.0) {
            return Err(Error::domain("success_rtol must be positive"));
        }
        if self.matrix_ensemble == MatrixEnsemble::RowOrthonormal && self.n > self.p {
            return Err(Error::domain("RowOrthonormal needs n <= p"));
        }
        if let NoiseSpec::L2Ball { eta, eps } = self.noise {
            if !(eps >= 0.0) || !(eta > 0.0) || eta < eps {
                return Err(Error::domain(format!(
                    "L2Ball noise needs 0 <= eps <= eta and eta > 0, got eps = {eps}, eta = {eta}"
                )));
            }
        }
        self.solver.validate()
    }

    /// Seed of trial `trial` in cell `(k_index, q_index)`.
    pub fn trial_seed(&self, k_index: usize, q_index: usize, trial: usize) -> u64 {
        derive_seed(self.master_seed, &[k_index as u64, q_index as u64, trial as u64])
    }
}

/// Sub-stream tags for the pieces of one trial.
pub(crate) mod stream {
    pub const MATRIX: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SOLVER: u64 = 4;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub k: usize,
    pub q: f64,
    pub seed_used: u64,
    pub success: bool,
    /// `||x_hat - x||_2 / ||x||_2`; infinite when the solver refused.
    pub rel_error: f64,
    pub solver_converged: bool,
    pub bound_value: Option<f64>,
    pub bound_satisfied: Option<bool>,
}

pub const CSV_HEADER: [&str; 9] = ["k", "q", "trial", "seed", "success", "rel_error", "converged", "bound", "bound_ok"];

/// Writes records in the fixed column order of [`CSV_HEADER`]. Floats use
/// the shortest representation that round-trips.
pub fn write_records_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.k.to_string(),
            r.q.to_string(),
            r.trial_index.to_string(),
            r.seed_used.to_string(),
            r.success.to_string(),
            r.rel_error.to_string(),
            r.solver_converged.to_string(),
            r.bound_value.map(|b| b.to_string()).unwrap_or_default(),
            r.bound_satisfied.map(|b| b.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
