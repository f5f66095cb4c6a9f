use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dense::{DenseVector, SenseMatrix};
use crate::error::{Error, Result};
use crate::norms::{check_q_unit, power_sum};
use crate::rng::{derive_seed, SplitMix64};

/// Objective increases within this much of the base value are reported as
/// near-violations (ties up to rounding).
const NEAR_RTOL: f64 = 1e-6;
const VIOLATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub trials: usize,
    pub null_dim: usize,
    pub trivial_null_space: bool,
    /// Perturbations with `f(x + h) < f(x) - 1e-12`.
    pub violations: usize,
    /// Perturbations with `f(x + h) <= f(x) + 1e-6 max(1, f(x))` that are not
    /// violations.
    pub near_violations: usize,
    /// Smallest `f(x + h) - f(x)` seen.
    pub min_gap: f64,
}

/// Orthonormal basis of the null space of `A`, one vector per column.
pub fn null_space_basis(a: &SenseMatrix) -> DMatrix<f64> {
    let (n, p) = (a.rows(), a.cols());
    // Pad to square so the decomposition returns a full set of right
    // singular vectors.
    let rows = n.max(p);
    let mut padded = DMatrix::zeros(rows, p);
    padded.rows_mut(0, n).copy_from(a.as_dmatrix());
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let top = svd.singular_values.max();
    let tol = top * f64::EPSILON * rows as f64;
    let null: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if null.is_empty() {
        DMatrix::zeros(p, 0)
    } else {
        DMatrix::from_columns(&null)
    }
}

/// Tries to falsify that `x` minimizes `||.||_q^q` on `{x + h : Ah = 0}`.
///
/// Trial `i` draws Gaussian coefficients on an orthonormal null-space basis
/// from the stream `derive_seed(seed, [i])`, normalizes the direction, and
/// evaluates the objective both at a uniformly drawn length in
/// `(0, radius]` and at the full `radius`.
pub fn null_space_probe(
    a: &SenseMatrix,
    x: &DenseVector,
    q: f64,
    trials: usize,
    radius: f64,
    seed: u64,
) -> Result<ProbeReport> {
    check_q_unit(q)?;
    if x.len() != a.cols() {
        return Err(Error::domain(format!("x has length {}, expected {}", x.len(), a.cols())));
    }
    if trials == 0 || !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::domain("trials must be >= 1 and radius positive"));
    }
    let basis = null_space_basis(a);
    let dim = basis.ncols();
    if dim == 0 {
        return Ok(ProbeReport {
            trials,
            null_dim: 0,
            trivial_null_space: true,
            violations: 0,
            near_violations: 0,
            min_gap: f64::INFINITY,
        });
    }
    let base = power_sum(x.as_slice(), q);
    let near = NEAR_RTOL * base.max(1.0);
    let xv = x.as_dvector();

    let (violations, near_violations, min_gap) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::new(derive_seed(seed, &[i as u64]));
            let coef = DVector::from_fn(dim, |_, _| rng.normal());
            let dir = &basis * coef;
            let norm = dir.norm();
            let dir = if norm > 0.0 { dir / norm } else { dir };
            let length = radius * rng.uniform_open_low();
            let mut counts = (0usize, 0usize, f64::INFINITY);
            for len in [length, radius] {
                let moved = xv + &dir * len;
                let gap = power_sum(moved.as_slice(), q) - base;
                if gap < -VIOLATION_TOL {
                    counts.0 += 1;
                } else if gap <= near {
                    counts.1 += 1;
                }
                counts.2 = counts.2.min(gap);
            }
            counts
        })
        .reduce(
            || (0, 0, f64::INFINITY),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2.min(b.2)),
        );
    Ok(ProbeReport {
        trials,
        null_dim: dim,
        trivial_null_space: false,
        violations,
        near_violations,
        min_gap,
    })
}
