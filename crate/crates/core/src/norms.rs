//! Quasi-norms, best k-term splits and the spectral quantities used by the
//! recovery guarantees.

use nalgebra::DVector;

use crate::dense::{DenseVector, SenseMatrix};
use crate::error::{Error, Result};

/// `(sum |v_i|^q)^(1/q)` for any `q > 0`.
pub fn lq_quasinorm(v: &DenseVector, q: f64) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::domain(format!(
            "lq quasi-norm needs q > 0, got {q}; use l0_count for q = 0"
        )));
    }
    let sum = power_sum(v.as_slice(), q);
    if sum == 0.0 {
        return Ok(0.0);
    }
    Ok(sum.powf(1.0 / q))
}

/// The recovery objective `sum |v_i|^q` for `0 < q <= 1`.
pub fn lq_power(v: &DenseVector, q: f64) -> Result<f64> {
    check_q_unit(q)?;
    Ok(power_sum(v.as_slice(), q))
}

pub(crate) fn power_sum(v: &[f64], q: f64) -> f64 {
    v.iter()
        .map(|x| {
            let a = x.abs();
            if a == 0.0 {
                0.0
            } else {
                a.powf(q)
            }
        })
        .sum()
}

pub(crate) fn check_q_unit(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain(format!("q must lie in (0, 1], got {q}")));
    }
    Ok(())
}

/// Number of entries with `|v_i| > tol`.
pub fn l0_count(v: &DenseVector, tol: f64) -> usize {
    v.iter().filter(|x| x.abs() > tol).count()
}

/// `l0_count` with the default threshold `1e-9 * ||v||_inf`.
pub fn l0_count_default(v: &DenseVector) -> usize {
    l0_count(v, 1e-9 * v.norm_inf())
}

/// A vector split into its best k-term approximation and the remainder.
#[derive(Clone, Debug, PartialEq)]
pub struct KTermSplit {
    pub head: DenseVector,
    pub tail: DenseVector,
    pub k: usize,
}

/// Indices of the `k` largest magnitudes; equal magnitudes go to the lower
/// index first.
pub fn top_k_indices(v: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    order.truncate(k);
    order.sort_unstable();
    order
}

pub fn best_k_split(v: &DenseVector, k: usize) -> Result<KTermSplit> {
    if k > v.len() {
        return Err(Error::domain(format!(
            "k = {k} exceeds vector length {}",
            v.len()
        )));
    }
    let mut head = vec![0.0; v.len()];
    let mut tail = v.to_vec();
    for i in top_k_indices(v.as_slice(), k) {
        head[i] = tail[i];
        tail[i] = 0.0;
    }
    Ok(KTermSplit {
        head: DenseVector::new(head)?,
        tail: DenseVector::new(tail)?,
        k,
    })
}

/// `||v_{-max(k)}||_2`, the l2 mass outside the best k-term approximation.
pub fn tail_norm2(v: &DenseVector, k: usize) -> Result<f64> {
    Ok(best_k_split(v, k)?.tail.norm2())
}

/// Largest singular value, from a full singular value decomposition.
pub fn spectral_norm(a: &SenseMatrix) -> f64 {
    a.as_dmatrix()
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |m, s| m.max(*s))
}

/// `count^(1/q - 1/2)`: the factor bounding `||v||_q` by `||v||_2` for a
/// vector with at most `count` nonzeros.
pub fn holder_factor(count: usize, q: f64) -> Result<f64> {
    if count == 0 {
        return Err(Error::domain("holder factor needs count >= 1"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("holder factor needs q in (0, 1), got {q}")));
    }
    Ok((count as f64).powf(1.0 / q - 0.5))
}

/// Left side minus right side of the weighted polarization identity
///
/// `sum_i l_i ||B(sum_j l_j b_j - c b_i)||^2 + (1-2c) sum_{i<j} l_i l_j ||B(b_i - b_j)||^2
///  = sum_i l_i (1-c)^2 ||B b_i||^2`,
///
/// which holds exactly whenever the weights sum to one.
pub fn polarization_residual(
    b: &SenseMatrix,
    betas: &[DenseVector],
    lambdas: &[f64],
    c: f64,
) -> Result<f64> {
    if betas.is_empty() || betas.len() != lambdas.len() {
        return Err(Error::domain(format!(
            "need matching non-empty betas and lambdas, got {} and {}",
            betas.len(),
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::domain("lambdas must be non-negative"));
    }
    let total: f64 = lambdas.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("lambdas sum to {total}, expected 1")));
    }
    let images = betas
        .iter()
        .map(|beta| b.mul_vec(beta).map(|v| v.as_dvector().clone()))
        .collect::<Result<Vec<DVector<f64>>>>()?;

    let mean = images
        .iter()
        .zip(lambdas)
        .fold(DVector::zeros(b.rows()), |acc, (g, l)| acc + g * *l);

    let spread: f64 = images
        .iter()
        .zip(lambdas)
        .map(|(g, l)| l * (&mean - g * c).norm_squared())
        .sum();
    let mut pairwise = 0.0;
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            pairwise += lambdas[i] * lambdas[j] * (&images[i] - &images[j]).norm_squared();
        }
    }
    let rhs: f64 = images
        .iter()
        .zip(lambdas)
        .map(|(g, l)| l * (1.0 - c).powi(2) * g.norm_squared())
        .sum();
    Ok(spread + (1.0 - 2.0 * c) * pairwise - rhs)
}
