use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, NoiseSpec, TrialRecord};
use super::phase::{build_instance, relative_error, solve_instance, trial_grid, Instance};
use crate::dense::DenseVector;
use crate::error::{Error, Result};
use crate::guarantee::{certify, error_bound_l2, BoundInputs, CertificateStatus, ErrorBoundReport};
use crate::norms::{spectral_norm, tail_norm2};
use crate::ric::{ric_profile, RicMethod, DEFAULT_ENUMERATION_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AuditOutcome {
    /// The certificate did not hold; no bound applies.
    Uncertified,
    /// The solver refused or did not converge.
    SolverFailed,
    BoundHeld,
    BoundViolated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditTrial {
    pub k: usize,
    pub q: f64,
    pub trial: usize,
    pub seed: u64,
    pub status: CertificateStatus,
    pub order_m: Option<usize>,
    pub delta_m: Option<f64>,
    pub margin: f64,
    /// Bound evaluated at the radius the solution actually attains,
    /// `max(eta, ||A x_hat - y||_2)`; zero when noiseless.
    pub bound: Option<ErrorBoundReport>,
    pub error: Option<f64>,
    pub rel_error: Option<f64>,
    pub converged: bool,
    pub outcome: AuditOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub config: ExperimentConfig,
    pub certified: usize,
    pub uncertified: usize,
    pub bound_held: usize,
    pub bound_violated: usize,
    pub solver_failed: usize,
    pub trials: Vec<AuditTrial>,
    pub records: Vec<TrialRecord>,
    /// Files written for violating trials.
    pub dumped: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Dump<'a> {
    trial: &'a AuditTrial,
    a: Vec<Vec<f64>>,
    x: &'a DenseVector,
    y: &'a DenseVector,
    x_hat: &'a DenseVector,
}

fn default_max_order(k: usize, p: usize) -> usize {
    (k + 3).min(p)
}

struct Evaluated {
    trial: AuditTrial,
    instance: Option<(Instance, DenseVector)>,
}

fn audit_trial(
    cfg: &ExperimentConfig,
    max_order: Option<usize>,
    ki: usize,
    qi: usize,
    t: usize,
) -> Result<Evaluated> {
    let (k, q) = (cfg.k_grid[ki], cfg.q_grid[qi]);
    let seed = cfg.trial_seed(ki, qi, t);
    let inst = build_instance(cfg, k, seed)?;
    let top = max_order.unwrap_or_else(|| default_max_order(k, cfg.p));
    let deltas = ric_profile(
        &inst.a,
        (k + 1)..=top,
        RicMethod::Exact { budget: DEFAULT_ENUMERATION_BUDGET },
    )?;
    let cert = certify(&deltas, k, q, top)?;
    let mut trial = AuditTrial {
        k,
        q,
        trial: t,
        seed,
        status: cert.status,
        order_m: cert.order_m,
        delta_m: cert.delta_m,
        margin: cert.margin,
        bound: None,
        error: None,
        rel_error: None,
        converged: false,
        outcome: AuditOutcome::Uncertified,
    };
    if cert.status != CertificateStatus::Certified {
        return Ok(Evaluated { trial, instance: None });
    }
    let res = match solve_instance(cfg, &inst, q, seed) {
        Ok(r) => r,
        Err(_) => {
            trial.outcome = AuditOutcome::SolverFailed;
            return Ok(Evaluated { trial, instance: None });
        }
    };
    let error = res.x_hat.sub(&inst.x)?.norm2();
    let rel = relative_error(&res.x_hat, &inst.x)?;
    let (eps, eta) = cfg.noise.levels();
    let bound = error_bound_l2(&BoundInputs {
        delta: cert.delta_m.expect("certified"),
        s: cert.s_star.expect("certified"),
        q,
        epsilon: eps,
        eta: eta.max(res.residual2),
        sigma: spectral_norm(&inst.a),
        tail2: tail_norm2(&inst.x, k)?,
    })?;
    let held = match cfg.noise {
        // the bound vanishes: exact recovery up to the success tolerance
        NoiseSpec::None => rel <= cfg.success_rtol,
        NoiseSpec::L2Ball { .. } => error <= bound.bound,
    };
    trial.error = Some(error);
    trial.rel_error = Some(rel);
    trial.converged = res.converged;
    trial.bound = Some(bound);
    trial.outcome = match (res.converged, held) {
        (false, _) => AuditOutcome::SolverFailed,
        (true, true) => AuditOutcome::BoundHeld,
        (true, false) => AuditOutcome::BoundViolated,
    };
    Ok(Evaluated { trial, instance: Some((inst, res.x_hat)) })
}

fn dump(dir: &Path, e: &Evaluated) -> Result<PathBuf> {
    let (inst, x_hat) = e.instance.as_ref().expect("violations keep their instance");
    let t = &e.trial;
    let path = dir.join(format!("audit_violation_k{}_q{}_t{}.json", t.k, t.q, t.trial));
    let body = Dump { trial: t, a: inst.a.to_rows(), x: &inst.x, y: &inst.y, x_hat };
    let text = serde_json::to_string_pretty(&body).map_err(|e| Error::numerical(e.to_string()))?;
    fs::create_dir_all(dir)?;
    fs::write(&path, text)?;
    Ok(path)
}

/// Checks the l2 stability bound on every certified trial of the campaign.
///
/// Constants are computed exactly at orders `k+1 ..= max_order` (default
/// `min(k + 3, p)`). Noiseless configurations check exact recovery
/// instead. Violating instances are written to `dump_dir` as JSON.
pub fn run_bound_audit(
    cfg: &ExperimentConfig,
    max_order: Option<usize>,
    dump_dir: Option<&Path>,
) -> Result<AuditReport> {
    cfg.validate()?;
    if let Some(m) = max_order {
        if let Some(k) = cfg.k_grid.iter().find(|&&k| m <= k || m > cfg.p) {
            return Err(Error::domain(format!(
                "max_order {m} must exceed every k (got {k}) and not exceed p = {}",
                cfg.p
            )));
        }
    }
    let evaluated: Vec<Evaluated> = trial_grid(cfg)
        .into_par_iter()
        .map(|(ki, qi, t)| audit_trial(cfg, max_order, ki, qi, t))
        .collect::<Result<_>>()?;

    let mut dumped = Vec::new();
    let mut counts = [0usize; 4];
    for e in &evaluated {
        counts[e.trial.outcome as usize] += 1;
        if e.trial.outcome == AuditOutcome::BoundViolated {
            if let Some(dir) = dump_dir {
                dumped.push(dump(dir, e)?);
            }
        }
    }
    let trials: Vec<AuditTrial> = evaluated.into_iter().map(|e| e.trial).collect();
    let records = trials
        .iter()
        .map(|t| TrialRecord {
            trial_index: t.trial,
            k: t.k,
            q: t.q,
            seed_used: t.seed,
            success: t.converged && t.rel_error.is_some_and(|r| r <= cfg.success_rtol),
            rel_error: t.rel_error.unwrap_or(f64::NAN),
            solver_converged: t.converged,
            bound_value: t.bound.as_ref().map(|b| b.bound),
            bound_satisfied: match t.outcome {
                AuditOutcome::BoundHeld => Some(true),
                AuditOutcome::BoundViolated => Some(false),
                _ => None,
            },
        })
        .collect();
    let [uncertified, solver_failed, bound_held, bound_violated] = counts;
    Ok(AuditReport {
        config: cfg.clone(),
        certified: solver_failed + bound_held + bound_violated,
        uncertified,
        bound_held,
        bound_violated,
        solver_failed,
        trials,
        records,
        dumped,
    })
}
