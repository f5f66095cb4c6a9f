//! Recovery-guarantee thresholds, certification against measured restricted
//! isometry constants, and the stability error bounds for the two noise
//! models.
//!
//! The central condition is `delta_{(s^q+1)k} < 1 / sqrt(s^(q-2) + 1)` for
//! some `s > 0`. With `q = 1` and `s = t - 1` it reduces to the sharp l1
//! condition `delta_{tk} < sqrt((t-1)/t)`.
//!
//! Note on the l1 comparison: for `t > 2` and `0 < q < 1` the lq threshold
//! `1 / sqrt((t-1)^(1-2/q) + 1)` is strictly *larger* than the l1 threshold,
//! i.e. the condition on `A` is weaker. [`compare_thresholds`] reports the
//! positive gap as `relaxation`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ric::{RicEstimate, RicMode};

/// Sharp l1 condition at order `k`: `delta_k < 1/3`.
pub const L1_SHARP_ORDER_K: f64 = 1.0 / 3.0;

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain(format!("q must lie in (0, 1], got {q}")));
    }
    Ok(())
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("s must be positive and finite, got {s}")));
    }
    Ok(())
}

/// `sqrt(s^(q-2) + 1)`, the reciprocal of the threshold.
pub fn root_factor(q: f64, s: f64) -> Result<f64> {
    check_q(q)?;
    check_s(s)?;
    Ok((s.powf(q - 2.0) + 1.0).sqrt())
}

/// `1 / sqrt(s^(q-2) + 1)`.
pub fn lq_threshold(q: f64, s: f64) -> Result<f64> {
    Ok(1.0 / root_factor(q, s)?)
}

/// `sqrt((t-1)/t)`, valid for `t > 4/3`.
pub fn l1_threshold(t: f64) -> Result<f64> {
    if !(t > 4.0 / 3.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "the sharp l1 bound holds only for t > 4/3, got {t}"
        )));
    }
    Ok(((t - 1.0) / t).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdComparison {
    pub q: f64,
    pub t: f64,
    pub lq: f64,
    pub l1: f64,
    pub relaxation: f64,
}

/// Compares the lq and l1 thresholds at the same order `tk`.
pub fn compare_thresholds(q: f64, t: f64) -> Result<ThresholdComparison> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("comparison needs q in (0, 1), got {q}")));
    }
    if !(t > 2.0) || !t.is_finite() {
        return Err(Error::domain(format!("comparison holds only for t > 2, got {t}")));
    }
    let lq = 1.0 / ((t - 1.0).powf(1.0 - 2.0 / q) + 1.0).sqrt();
    let l1 = l1_threshold(t)?;
    Ok(ThresholdComparison { q, t, lq, l1, relaxation: lq - l1 })
}

/// Largest `s` whose order `(s^q + 1) k` rounds up to `order`.
pub fn s_for_order(order: usize, k: usize, q: f64) -> Result<f64> {
    check_q(q)?;
    if k == 0 || order <= k {
        return Err(Error::domain(format!("order {order} must exceed k = {k}")));
    }
    Ok((order as f64 / k as f64 - 1.0).powf(1.0 / q))
}

/// Outcome of checking the condition at one order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderCheck {
    pub order: usize,
    pub s: f64,
    pub threshold: f64,
    pub delta: f64,
    pub mode: RicMode,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CertificateStatus {
    /// The condition holds with exactly computed constants.
    Certified,
    /// The condition fails at every order examined. With lower-bound
    /// constants this is still conclusive, since the true constant can only
    /// be larger.
    Refuted,
    /// The condition holds only against lower bounds of the constants.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GuaranteeCertificate {
    pub q: f64,
    pub k: usize,
    pub s_star: Option<f64>,
    pub order_m: Option<usize>,
    pub delta_m: Option<f64>,
    pub threshold: Option<f64>,
    pub satisfied: bool,
    /// `threshold - delta` at the best order; negative when nothing passes.
    pub margin: f64,
    pub status: CertificateStatus,
    pub orders: Vec<OrderCheck>,
}

/// Searches integer orders `k+1 ..= max_order` for one where the measured
/// constant is below the threshold for the largest admissible `s`, and keeps
/// the order with the largest margin.
pub fn certify(
    deltas: &BTreeMap<usize, RicEstimate>,
    k: usize,
    q: f64,
    max_order: usize,
) -> Result<GuaranteeCertificate> {
    check_q(q)?;
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if max_order <= k {
        return Err(Error::domain(format!(
            "empty order range: max_order {max_order} must exceed k = {k}"
        )));
    }
    let mut orders = Vec::with_capacity(max_order - k);
    for m in (k + 1)..=max_order {
        let est = deltas
            .get(&m)
            .ok_or_else(|| Error::domain(format!("no restricted isometry constant for order {m}")))?;
        let s = s_for_order(m, k, q)?;
        let threshold = lq_threshold(q, s)?;
        orders.push(OrderCheck {
            order: m,
            s,
            threshold,
            delta: est.value,
            mode: est.mode,
            passed: est.value < threshold,
        });
    }
    let best = orders
        .iter()
        .max_by(|a, b| {
            (a.threshold - a.delta)
                .total_cmp(&(b.threshold - b.delta))
                // earliest order wins ties
                .then(b.order.cmp(&a.order))
        })
        .expect("order range is non-empty");
    let margin = best.threshold - best.delta;
    let satisfied = best.passed;
    let status = match (satisfied, best.mode) {
        (true, RicMode::Exact) => CertificateStatus::Certified,
        (true, RicMode::LowerBound) => CertificateStatus::Inconclusive,
        (false, _) => CertificateStatus::Refuted,
    };
    let chosen = satisfied.then(|| best.clone());
    Ok(GuaranteeCertificate {
        q,
        k,
        s_star: chosen.as_ref().map(|c| c.s),
        order_m: chosen.as_ref().map(|c| c.order),
        delta_m: chosen.as_ref().map(|c| c.delta),
        threshold: chosen.as_ref().map(|c| c.threshold),
        satisfied,
        margin,
        status,
        orders,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// Noise bounded in l2: `||z||_2 <= eta`.
    L2Ball,
    /// Correlation-bounded noise: `||A^T z||_inf <= eta`.
    Dantzig,
}

/// Smallest admissible constraint radius for the stability bound:
/// `eps + sigma * tail2` (l2 ball) or `eps + sigma^2 * tail2` (Dantzig).
pub fn eta_min(model: NoiseModel, epsilon: f64, sigma: f64, tail2: f64) -> Result<f64> {
    for (name, v) in [("epsilon", epsilon), ("sigma", sigma), ("tail2", tail2)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} must be non-negative, got {v}")));
        }
    }
    Ok(match model {
        NoiseModel::L2Ball => epsilon + sigma * tail2,
        NoiseModel::Dantzig => epsilon + sigma * sigma * tail2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBoundReport {
    pub model: NoiseModel,
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    pub s: f64,
    pub q: f64,
    pub k: Option<usize>,
    pub sigma: f64,
    pub tail2: f64,
    pub threshold: f64,
    pub root_factor: f64,
    pub eta_min: f64,
    pub amplifier: f64,
    pub bound: f64,
}

/// Inputs shared by both stability bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub delta: f64,
    pub s: f64,
    pub q: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub sigma: f64,
    pub tail2: f64,
}

fn bound_common(model: NoiseModel, inp: &BoundInputs) -> Result<(f64, f64, f64)> {
    let root = root_factor(inp.q, inp.s)?;
    let threshold = 1.0 / root;
    if !(inp.delta >= 0.0) || !inp.delta.is_finite() {
        return Err(Error::domain(format!("delta must be non-negative, got {}", inp.delta)));
    }
    if inp.delta >= threshold {
        return Err(Error::domain(format!(
            "guarantee inapplicable: delta = {} is not below the threshold {threshold}",
            inp.delta
        )));
    }
    let floor = eta_min(model, inp.epsilon, inp.sigma, inp.tail2)?;
    if !(inp.eta >= 0.0) || inp.eta < floor * (1.0 - 1e-12) {
        let hyp = match model {
            NoiseModel::L2Ball => "eta >= epsilon + sigma(A) * ||x_tail||_2",
            NoiseModel::Dantzig => "eta >= epsilon + sigma(A)^2 * ||x_tail||_2",
        };
        return Err(Error::domain(format!(
            "stability hypothesis {hyp} fails: eta = {} < {floor}",
            inp.eta
        )));
    }
    Ok((root, threshold, floor))
}

/// Stability bound for the l2-ball noise model:
/// `C (eps + eta) + (C sigma + 1) tail2` with
/// `C = sqrt(2(1 + delta)) / (1 - sqrt(s^(q-2) + 1) delta)`.
pub fn error_bound_l2(inp: &BoundInputs) -> Result<ErrorBoundReport> {
    let (root, threshold, floor) = bound_common(NoiseModel::L2Ball, inp)?;
    let amplifier = (2.0 * (1.0 + inp.delta)).sqrt() / (1.0 - root * inp.delta);
    let bound = amplifier * (inp.epsilon + inp.eta) + (amplifier * inp.sigma + 1.0) * inp.tail2;
    Ok(report(NoiseModel::L2Ball, inp, None, threshold, root, floor, amplifier, bound))
}

/// Stability bound for the Dantzig noise model:
/// `C (eps + eta) + (C sigma^2 + 1) tail2` with
/// `C = sqrt(2 (s^q + 1) k) / (1 - sqrt(s^(q-2) + 1) delta)`.
pub fn error_bound_dantzig(inp: &BoundInputs, k: usize) -> Result<ErrorBoundReport> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    let (root, threshold, floor) = bound_common(NoiseModel::Dantzig, inp)?;
    let order = (inp.s.powf(inp.q) + 1.0) * k as f64;
    let amplifier = (2.0 * order).sqrt() / (1.0 - root * inp.delta);
    let bound = amplifier * (inp.epsilon + inp.eta)
        + (amplifier * inp.sigma * inp.sigma + 1.0) * inp.tail2;
    Ok(report(NoiseModel::Dantzig, inp, Some(k), threshold, root, floor, amplifier, bound))
}

#[allow(clippy::too_many_arguments)]
fn report(
    model: NoiseModel,
    inp: &BoundInputs,
    k: Option<usize>,
    threshold: f64,
    root_factor: f64,
    eta_min: f64,
    amplifier: f64,
    bound: f64,
) -> ErrorBoundReport {
    ErrorBoundReport {
        model,
        epsilon: inp.epsilon,
        eta: inp.eta,
        delta: inp.delta,
        s: inp.s,
        q: inp.q,
        k,
        sigma: inp.sigma,
        tail2: inp.tail2,
        threshold,
        root_factor,
        eta_min,
        amplifier,
        bound,
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant, clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exact(order: usize, value: f64) -> (usize, RicEstimate) {
        (order, RicEstimate { order, value, mode: RicMode::Exact, supports_examined: 1 })
    }

    #[test]
    fn threshold_spot_values() {
        assert_abs_diff_eq!(lq_threshold(1.0, 1.0).unwrap(), 0.7071067812, epsilon = 1e-9);
        assert_abs_diff_eq!(lq_threshold(1.0, 3.0).unwrap(), 0.8660254038, epsilon = 1e-9);
        assert_abs_diff_eq!(
            lq_threshold(0.5, 4.0).unwrap(),
            0.942_809_041_582_063_4,
            epsilon = 1e-15
        );
        assert!(lq_threshold(0.0, 1.0).is_err());
        assert!(lq_threshold(1.2, 1.0).is_err());
        assert!(lq_threshold(0.5, 0.0).is_err());
    }

    #[test]
    fn l1_threshold_domain() {
        assert_abs_diff_eq!(l1_threshold(2.0).unwrap(), 0.7071067812, epsilon = 1e-9);
        assert_abs_diff_eq!(l1_threshold(4.0).unwrap(), 0.8660254038, epsilon = 1e-9);
        assert!(matches!(l1_threshold(4.0 / 3.0), Err(Error::Domain(_))));
        assert!(l1_threshold(1.0).is_err());
    }

    #[test]
    fn comparison_example() {
        let c = compare_thresholds(0.5, 3.0).unwrap();
        assert_abs_diff_eq!(c.lq, 0.942_809_041_582_063_4, epsilon = 1e-15);
        assert_abs_diff_eq!(c.l1, 0.816_496_580_927_726_0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.relaxation, 0.126_312_460_654_337_3, epsilon = 1e-15);
        let near_one = compare_thresholds(1.0 - 1e-9, 3.0).unwrap();
        assert_abs_diff_eq!(near_one.lq, near_one.l1, epsilon = 1e-8);
        assert!(compare_thresholds(0.5, 2.0).is_err());
        assert!(compare_thresholds(1.0, 3.0).is_err());
    }

    #[test]
    fn certify_identity_passes_everywhere() {
        let deltas: BTreeMap<_, _> = (2..=5).map(|m| exact(m, 0.0)).collect();
        let cert = certify(&deltas, 1, 0.5, 5).unwrap();
        assert!(cert.satisfied);
        assert_eq!(cert.status, CertificateStatus::Certified);
        let best = (2..=5)
            .map(|m| lq_threshold(0.5, s_for_order(m, 1, 0.5).unwrap()).unwrap())
            .fold(0.0, f64::max);
        assert_eq!(cert.margin, best);
        assert_eq!(cert.order_m, Some(5));
    }

    #[test]
    fn certify_duplicate_columns_fails() {
        let deltas: BTreeMap<_, _> = (2..=4).map(|m| exact(m, 1.0)).collect();
        let cert = certify(&deltas, 1, 0.5, 4).unwrap();
        assert!(!cert.satisfied);
        assert_eq!(cert.status, CertificateStatus::Refuted);
        assert!(cert.s_star.is_none() && cert.order_m.is_none());
        assert!(cert.margin < 0.0);
    }

    #[test]
    fn certify_order_matches_ceiling_rule() {
        let deltas: BTreeMap<_, _> = (3..=9).map(|m| exact(m, 0.2)).collect();
        for q in [0.3, 0.5, 0.8, 1.0] {
            let cert = certify(&deltas, 2, q, 9).unwrap();
            for check in &cert.orders {
                let real = (check.s.powf(q) + 1.0) * 2.0;
                assert_eq!(crate::ric::ric_order(real).unwrap(), check.order);
            }
        }
    }

    #[test]
    fn certify_lower_bounds_are_inconclusive_when_passing() {
        let mut deltas: BTreeMap<_, _> = (2..=3).map(|m| exact(m, 0.1)).collect();
        for est in deltas.values_mut() {
            est.mode = RicMode::LowerBound;
        }
        let cert = certify(&deltas, 1, 0.5, 3).unwrap();
        assert!(cert.satisfied);
        assert_eq!(cert.status, CertificateStatus::Inconclusive);
    }

    #[test]
    fn certify_rejects_empty_or_missing_range() {
        let deltas: BTreeMap<_, _> = (2..=3).map(|m| exact(m, 0.1)).collect();
        assert!(certify(&deltas, 3, 0.5, 3).is_err());
        assert!(certify(&deltas, 1, 0.5, 4).is_err());
    }

    #[test]
    fn eta_min_examples() {
        assert_eq!(eta_min(NoiseModel::L2Ball, 0.3, 2.0, 0.0).unwrap(), 0.3);
        assert_eq!(eta_min(NoiseModel::Dantzig, 0.3, 2.0, 0.0).unwrap(), 0.3);
        assert_abs_diff_eq!(eta_min(NoiseModel::L2Ball, 0.1, 1.2, 0.05).unwrap(), 0.16, epsilon = 1e-15);
        assert_abs_diff_eq!(eta_min(NoiseModel::Dantzig, 0.1, 2.0, 0.05).unwrap(), 0.3, epsilon = 1e-15);
        assert!(eta_min(NoiseModel::L2Ball, -0.1, 1.0, 0.0).is_err());
    }

    fn inputs(delta: f64, s: f64, q: f64, epsilon: f64, eta: f64, sigma: f64, tail2: f64) -> BoundInputs {
        BoundInputs { delta, s, q, epsilon, eta, sigma, tail2 }
    }

    #[test]
    fn l2_bound_examples() {
        let r = error_bound_l2(&inputs(0.3, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0)).unwrap();
        assert_eq!(r.bound, 0.0);

        let (e, h, sg, t) = (0.1, 0.4, 1.3, 0.2);
        let r = error_bound_l2(&inputs(0.0, 1.0, 1.0, e, h, sg, t)).unwrap();
        let c = 2f64.sqrt();
        assert_abs_diff_eq!(r.amplifier, c, epsilon = 1e-15);
        assert_abs_diff_eq!(r.bound, c * (e + h) + (c * sg + 1.0) * t, epsilon = 1e-14);

        // 50-digit reference evaluation
        let r = error_bound_l2(&inputs(0.5, 4.0, 0.5, 0.1, 0.2, 1.2, 0.05)).unwrap();
        assert_abs_diff_eq!(r.amplifier, 3.687_804_467_634_878_7, epsilon = 1e-13);
        assert_abs_diff_eq!(r.bound, 1.377_609_608_348_556_3, epsilon = 1e-13);
        assert_abs_diff_eq!(r.eta_min, 0.16, epsilon = 1e-15);
    }

    #[test]
    fn dantzig_bound_examples() {
        let r = error_bound_dantzig(&inputs(0.2, 1.0, 1.0, 0.0, 0.0, 2.0, 0.0), 3).unwrap();
        assert_eq!(r.bound, 0.0);

        let (e, h, sg, t) = (0.1, 0.9, 0.8, 0.1);
        let r = error_bound_dantzig(&inputs(0.0, 1.0, 1.0, e, h, sg, t), 2).unwrap();
        let c = 8f64.sqrt();
        assert_abs_diff_eq!(r.amplifier, c, epsilon = 1e-15);
        assert_abs_diff_eq!(r.bound, c * (e + h) + (c * sg * sg + 1.0) * t, epsilon = 1e-14);

        // 50-digit reference evaluation; amplifier numerator is sqrt(2 * 3 * 2)
        let r = error_bound_dantzig(&inputs(0.5, 4.0, 0.5, 0.1, 0.5, 1.0, 0.1), 2).unwrap();
        assert_abs_diff_eq!(r.amplifier, 7.375_608_935_269_757_4, epsilon = 1e-13);
        assert_abs_diff_eq!(r.bound, 5.262_926_254_688_830_2, epsilon = 1e-13);
    }

    #[test]
    fn bound_preconditions() {
        let err = error_bound_l2(&inputs(0.8, 1.0, 1.0, 0.1, 0.2, 1.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("inapplicable"));
        let err = error_bound_l2(&inputs(0.1, 1.0, 1.0, 0.1, 0.15, 1.2, 0.05)).unwrap_err();
        assert!(err.to_string().contains("hypothesis"));
        let err = error_bound_dantzig(&inputs(0.1, 1.0, 1.0, 0.1, 0.2, 2.0, 0.05), 1).unwrap_err();
        assert!(err.to_string().contains("hypothesis"));
        assert!(error_bound_dantzig(&inputs(0.1, 1.0, 1.0, 0.1, 0.2, 1.0, 0.0), 0).is_err());
    }
}
