use rayon::prelude::*;
use serde::Serialize;

use super::config::{stream, ExperimentConfig, NoiseSpec, TrialRecord};
use super::ensemble::{gen_gaussian, gen_noise, gen_sparse};
use crate::dense::{DenseVector, SenseMatrix};
use crate::error::Result;
use crate::rng::derive_seed;
use crate::solver::{irls_lq, irls_lq_denoise, SolverOptions, SolverResult};

/// One random recovery instance.
pub(crate) struct Instance {
    pub a: SenseMatrix,
    pub x: DenseVector,
    pub y: DenseVector,
}

pub(crate) fn build_instance(cfg: &ExperimentConfig, k: usize, seed: u64) -> Result<Instance> {
    let a = gen_gaussian(cfg.n, cfg.p, derive_seed(seed, &[stream::MATRIX]), cfg.matrix_ensemble)?;
    let x = gen_sparse(cfg.p, k, derive_seed(seed, &[stream::SIGNAL]), cfg.signal)?;
    let (eps, _) = cfg.noise.levels();
    let z = gen_noise(cfg.n, eps, derive_seed(seed, &[stream::NOISE]))?;
    let y = a.mul_vec(&x)?.add(&z)?;
    Ok(Instance { a, x, y })
}

pub(crate) fn solve_instance(cfg: &ExperimentConfig, inst: &Instance, q: f64, seed: u64) -> Result<SolverResult> {
    let opts = SolverOptions { seed: derive_seed(seed, &[stream::SOLVER]), ..cfg.solver.clone() };
    match cfg.noise {
        NoiseSpec::None => irls_lq(&inst.a, &inst.y, q, &opts),
        NoiseSpec::L2Ball { eta, .. } => irls_lq_denoise(&inst.a, &inst.y, q, eta, &opts),
    }
}

pub(crate) fn relative_error(x_hat: &DenseVector, x: &DenseVector) -> Result<f64> {
    let err = x_hat.sub(x)?.norm2();
    let scale = x.norm2();
    Ok(if scale > 0.0 { err / scale } else { err })
}

/// Every `(k index, q index, trial)` triple in the stable output order.
pub(crate) fn trial_grid(cfg: &ExperimentConfig) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(cfg.k_grid.len() * cfg.q_grid.len() * cfg.trials);
    for ki in 0..cfg.k_grid.len() {
        for qi in 0..cfg.q_grid.len() {
            for t in 0..cfg.trials {
                out.push((ki, qi, t));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseCell {
    pub k: usize,
    pub q: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Binomial standard error `sqrt(rate (1 - rate) / trials)`.
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub config: ExperimentConfig,
    pub cells: Vec<PhaseCell>,
    pub records: Vec<TrialRecord>,
    /// Soft checks: success rate rising with k at fixed q.
    pub warnings: Vec<String>,
}

impl PhaseReport {
    pub fn cell(&self, k: usize, q: f64) -> Option<&PhaseCell> {
        self.cells.iter().find(|c| c.k == k && c.q == q)
    }
}

fn run_trial(cfg: &ExperimentConfig, ki: usize, qi: usize, trial: usize) -> TrialRecord {
    let (k, q) = (cfg.k_grid[ki], cfg.q_grid[qi]);
    let seed = cfg.trial_seed(ki, qi, trial);
    let outcome = build_instance(cfg, k, seed).and_then(|inst| {
        let res = solve_instance(cfg, &inst, q, seed)?;
        Ok((relative_error(&res.x_hat, &inst.x)?, res.converged))
    });
    // solver refusals are recorded as failed trials
    let (rel_error, converged) = outcome.unwrap_or((f64::INFINITY, false));
    TrialRecord {
        trial_index: trial,
        k,
        q,
        seed_used: seed,
        success: converged && rel_error <= cfg.success_rtol,
        rel_error,
        solver_converged: converged,
        bound_value: None,
        bound_satisfied: None,
    }
}

/// Success rates over the `(k, q)` grid.
///
/// Trials run in parallel; records are collected in `(k, q, trial)` grid
/// order so the output does not depend on the worker count.
pub fn run_phase(cfg: &ExperimentConfig) -> Result<PhaseReport> {
    cfg.validate()?;
    let records: Vec<TrialRecord> = trial_grid(cfg)
        .into_par_iter()
        .map(|(ki, qi, t)| run_trial(cfg, ki, qi, t))
        .collect();

    let mut cells = Vec::new();
    for (ki, &k) in cfg.k_grid.iter().enumerate() {
        for (qi, &q) in cfg.q_grid.iter().enumerate() {
            let start = (ki * cfg.q_grid.len() + qi) * cfg.trials;
            let block = &records[start..start + cfg.trials];
            let successes = block.iter().filter(|r| r.success).count();
            let rate = successes as f64 / cfg.trials as f64;
            cells.push(PhaseCell {
                k,
                q,
                trials: cfg.trials,
                successes,
                success_rate: rate,
                std_error: (rate * (1.0 - rate) / cfg.trials as f64).sqrt(),
            });
        }
    }

    let mut warnings = Vec::new();
    for &q in &cfg.q_grid {
        let mut by_k: Vec<&PhaseCell> = cells.iter().filter(|c| c.q == q).collect();
        by_k.sort_by_key(|c| c.k);
        for pair in by_k.windows(2) {
            if pair[1].success_rate > pair[0].success_rate {
                warnings.push(format!(
                    "q = {q}: success rate rises from {} at k = {} to {} at k = {}",
                    pair[0].success_rate, pair[0].k, pair[1].success_rate, pair[1].k
                ));
            }
        }
    }

    Ok(PhaseReport { config: cfg.clone(), cells, records, warnings })
}
