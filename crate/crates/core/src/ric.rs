//! Restricted isometry constants.
//!
//! The order-`k` constant of `A` is the smallest `delta` with
//! `(1 - delta)||x||^2 <= ||Ax||^2 <= (1 + delta)||x||^2` for every k-sparse
//! `x`. For a fixed matrix this equals the largest deviation
//! `max(lambda_max(S) - 1, 1 - lambda_min(S))` of the restricted Gram matrix
//! `A_S^T A_S` over supports `|S| = k`. [`exact_ric`] enumerates every
//! support; [`mc_ric_lower`] samples supports and therefore only bounds the
//! constant from below.
//!
//! Deviations above one are reported unclamped: such a matrix has no RIP of
//! that order at all.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinations::{advance, binomial, unrank};
use crate::dense::SenseMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

/// Default cap on the number of supports [`exact_ric`] will enumerate.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

/// Number of contiguous lexicographic chunks the enumeration is cut into.
/// Fixed so the work split never depends on the thread count.
const ENUMERATION_CHUNKS: u128 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RicMode {
    Exact,
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RicEstimate {
    pub order: usize,
    pub value: f64,
    pub mode: RicMode,
    pub supports_examined: u128,
}

impl RicEstimate {
    /// True when no `delta <= 1` satisfies the two-sided isometry bound.
    pub fn rip_violated(&self) -> bool {
        self.value > 1.0
    }
}

/// Integer order for a real order: `ceil(k_real)`.
///
/// Values within `1e-12` (relative) above an integer snap down to it, so
/// orders computed as `(s^q + 1) k` in floating point land on the integer
/// they represent.
pub fn ric_order(k_real: f64) -> Result<usize> {
    if !(k_real > 0.0) || !k_real.is_finite() {
        return Err(Error::domain(format!("order must be positive, got {k_real}")));
    }
    let nearest = k_real.round();
    if nearest >= 1.0 && (k_real - nearest).abs() <= 1e-12 * k_real.max(1.0) {
        return Ok(nearest as usize);
    }
    Ok(k_real.ceil() as usize)
}

/// Smallest and largest eigenvalue of `A_S^T A_S`.
pub fn gram_extremes(a: &SenseMatrix, support: &[usize]) -> Result<(f64, f64)> {
    validate_support(support, a.cols())?;
    let m = a.as_dmatrix();
    let k = support.len();
    let gram = DMatrix::from_fn(k, k, |i, j| {
        m.column(support[i]).dot(&m.column(support[j]))
    });
    Ok(symmetric_extremes(gram))
}

fn validate_support(support: &[usize], p: usize) -> Result<()> {
    if support.is_empty() {
        return Err(Error::domain("support must be non-empty"));
    }
    if let Some(&i) = support.iter().find(|&&i| i >= p) {
        return Err(Error::domain(format!("support index {i} out of range for {p} columns")));
    }
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("support indices must be distinct"));
    }
    Ok(())
}

fn symmetric_extremes(gram: DMatrix<f64>) -> (f64, f64) {
    if gram.nrows() == 1 {
        let g = gram[(0, 0)];
        return (g, g);
    }
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn deviation((lo, hi): (f64, f64)) -> f64 {
    (hi - 1.0).max(1.0 - lo)
}

fn deviation_on(gram: &DMatrix<f64>, support: &[usize], scratch: &mut DMatrix<f64>) -> f64 {
    for (i, &si) in support.iter().enumerate() {
        for (j, &sj) in support.iter().enumerate() {
            scratch[(i, j)] = gram[(si, sj)];
        }
    }
    deviation(symmetric_extremes(scratch.clone()))
}

fn check_order(a: &SenseMatrix, k: usize) -> Result<()> {
    if k == 0 || k > a.cols() {
        return Err(Error::domain(format!(
            "order must lie in 1..={}, got {k}",
            a.cols()
        )));
    }
    Ok(())
}

/// Exact constant by enumerating every support, with the default budget.
pub fn exact_ric(a: &SenseMatrix, k: usize) -> Result<RicEstimate> {
    exact_ric_with_budget(a, k, DEFAULT_ENUMERATION_BUDGET)
}

pub fn exact_ric_with_budget(a: &SenseMatrix, k: usize, budget: u128) -> Result<RicEstimate> {
    check_order(a, k)?;
    let p = a.cols();
    let total = binomial(p, k);
    if total > budget {
        return Err(Error::budget(format!(
            "C({p}, {k}) = {total} supports exceeds the enumeration budget {budget}; \
             use the Monte Carlo lower bound instead"
        )));
    }
    let gram = a.as_dmatrix().tr_mul(a.as_dmatrix());
    let chunks = ENUMERATION_CHUNKS.min(total);
    let value = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = total * c / chunks;
            let end = total * (c + 1) / chunks;
            let mut comb = unrank(p, k, start);
            let mut scratch = DMatrix::zeros(k, k);
            let mut best = f64::NEG_INFINITY;
            for _ in start..end {
                best = best.max(deviation_on(&gram, &comb, &mut scratch));
                advance(&mut comb, p);
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(RicEstimate {
        order: k,
        value: value.max(0.0),
        mode: RicMode::Exact,
        supports_examined: total,
    })
}

/// Lower bound from `trials` uniformly sampled supports.
///
/// Sample `i` is drawn from the stream `derive_seed(seed, [i])`, so a run
/// with more trials examines a superset of the supports of a shorter run.
pub fn mc_ric_lower(a: &SenseMatrix, k: usize, trials: usize, seed: u64) -> Result<RicEstimate> {
    check_order(a, k)?;
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let p = a.cols();
    let gram = a.as_dmatrix().tr_mul(a.as_dmatrix());
    let value = (0..trials)
        .into_par_iter()
        .map_init(
            || DMatrix::zeros(k, k),
            |scratch, i| {
                let mut rng = SplitMix64::new(derive_seed(seed, &[i as u64]));
                let support = rng.subset(p, k);
                deviation_on(&gram, &support, scratch)
            },
        )
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(RicEstimate {
        order: k,
        value: value.max(0.0),
        mode: RicMode::LowerBound,
        supports_examined: trials as u128,
    })
}

/// How to obtain constants for a range of orders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RicMethod {
    Exact { budget: u128 },
    MonteCarlo { trials: usize, seed: u64 },
}

/// Constants for every order in `orders`.
pub fn ric_profile(
    a: &SenseMatrix,
    orders: impl IntoIterator<Item = usize>,
    method: RicMethod,
) -> Result<BTreeMap<usize, RicEstimate>> {
    orders
        .into_iter()
        .map(|m| {
            let est = match method {
                RicMethod::Exact { budget } => exact_ric_with_budget(a, m, budget)?,
                RicMethod::MonteCarlo { trials, seed } => mc_ric_lower(a, m, trials, seed)?,
            };
            Ok((m, est))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn order_ceiling_rule() {
        assert_eq!(ric_order(2.4).unwrap(), 3);
        assert_eq!(ric_order(3.0).unwrap(), 3);
        assert_eq!(ric_order((1f64.powf(0.5) + 1.0) * 2.0).unwrap(), 4);
        assert_eq!(ric_order(2.000_000_000_000_000_4).unwrap(), 2);
        assert_eq!(ric_order(0.3).unwrap(), 1);
        assert!(ric_order(0.0).is_err());
        assert!(ric_order(-1.0).is_err());
    }

    #[test]
    fn gram_extremes_examples() {
        let id = SenseMatrix::identity(4);
        let (lo, hi) = gram_extremes(&id, &[0, 2, 3]).unwrap();
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-12);

        let dup = SenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let (lo, hi) = gram_extremes(&dup, &[0, 1]).unwrap();
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 2.0, epsilon = 1e-12);

        let r = 0.5f64.sqrt();
        let half = SenseMatrix::from_rows(&[vec![r, 0.0], vec![0.0, r], vec![r, r]]).unwrap();
        let (lo, hi) = gram_extremes(&half, &[0, 1]).unwrap();
        assert_abs_diff_eq!(lo, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn gram_extremes_rejects_bad_supports() {
        let id = SenseMatrix::identity(3);
        assert!(matches!(gram_extremes(&id, &[]), Err(Error::Domain(_))));
        assert!(gram_extremes(&id, &[0, 3]).is_err());
        assert!(gram_extremes(&id, &[1, 1]).is_err());
    }

    #[test]
    fn exact_examples() {
        let id = SenseMatrix::identity(5);
        for k in 1..=5 {
            let est = exact_ric(&id, k).unwrap();
            assert_abs_diff_eq!(est.value, 0.0, epsilon = 1e-12);
            assert_eq!(est.mode, RicMode::Exact);
            assert_eq!(est.supports_examined, binomial(5, k));
        }
        let dup = SenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(exact_ric(&dup, 2).unwrap().value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn budget_refusal() {
        let id = SenseMatrix::identity(30);
        let err = exact_ric_with_budget(&id, 15, 1000).unwrap_err();
        assert!(matches!(err, Error::Budget(_)));
        assert_eq!(err.exit_code(), 3);
        assert!(exact_ric(&id, 0).is_err());
        assert!(exact_ric(&id, 31).is_err());
    }

    #[test]
    fn unclamped_values_flag_violation() {
        let big = SenseMatrix::identity(3).scaled(2.0).unwrap();
        let est = exact_ric(&big, 2).unwrap();
        assert_abs_diff_eq!(est.value, 3.0, epsilon = 1e-12);
        assert!(est.rip_violated());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = SenseMatrix::from_rows(&[
            vec![1.0, 0.2, -0.4, 0.3],
            vec![0.1, 0.9, 0.5, -0.2],
        ])
        .unwrap();
        let x = mc_ric_lower(&a, 2, 50, 11).unwrap();
        let y = mc_ric_lower(&a, 2, 50, 11).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.mode, RicMode::LowerBound);
        assert_eq!(x.supports_examined, 50);
        // 6 supports, 500 draws: every support is hit
        let full = mc_ric_lower(&a, 2, 500, 5).unwrap();
        assert_eq!(full.value, exact_ric(&a, 2).unwrap().value);
        assert!(mc_ric_lower(&a, 2, 0, 1).is_err());
    }
}
