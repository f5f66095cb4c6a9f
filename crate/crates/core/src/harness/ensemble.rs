//! Seeded random test instances.
//!
//! Matrices are drawn row by row (row-major order) from a single SplitMix64
//! stream; see [`crate::rng`] for the exact stream definition.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense::{DenseVector, SenseMatrix};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixEnsemble {
    /// i.i.d. normal entries with variance `1/n`.
    GaussianIID,
    /// Gaussian columns rescaled to unit l2 norm.
    GaussianColumnNormalized,
    /// Rows of a Gaussian draw orthonormalized (Gram-Schmidt order, so the
    /// triangular factor has a positive diagonal).
    RowOrthonormal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalDistribution {
    /// Nonzeros are +1 or -1.
    Rademacher,
    /// Nonzeros are standard normal, redrawn while `|value| < 1e-3`.
    #[default]
    Gaussian,
}

pub fn gen_gaussian(n: usize, p: usize, seed: u64, ensemble: MatrixEnsemble) -> Result<SenseMatrix> {
    if n == 0 || p == 0 {
        return Err(Error::domain("matrix dimensions must be positive"));
    }
    if ensemble == MatrixEnsemble::RowOrthonormal && n > p {
        return Err(Error::domain(format!(
            "cannot orthonormalize {n} rows of length {p}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let mut entries = vec![0.0; n * p];
    for e in &mut entries {
        *e = rng.normal() * scale;
    }
    let mut m = DMatrix::from_row_slice(n, p, &entries);
    match ensemble {
        MatrixEnsemble::GaussianIID => {}
        MatrixEnsemble::GaussianColumnNormalized => {
            for mut col in m.column_iter_mut() {
                let norm = col.norm();
                if norm > 0.0 {
                    col /= norm;
                }
            }
        }
        MatrixEnsemble::RowOrthonormal => {
            let qr = m.transpose().qr();
            let r = qr.r();
            let mut q = qr.q();
            for j in 0..n {
                if r[(j, j)] < 0.0 {
                    let mut col = q.column_mut(j);
                    col.neg_mut();
                }
            }
            m = q.transpose();
        }
    }
    SenseMatrix::new(m)
}

/// A vector with exactly `k` nonzeros on a uniformly random support. The
/// support is drawn first, then the values in ascending index order.
pub fn gen_sparse(p: usize, k: usize, seed: u64, dist: SignalDistribution) -> Result<DenseVector> {
    if p == 0 || k > p {
        return Err(Error::domain(format!("need 0 <= k <= p with p >= 1, got k = {k}, p = {p}")));
    }
    let mut rng = SplitMix64::new(seed);
    let support = rng.subset(p, k);
    let mut x = vec![0.0; p];
    for i in support {
        x[i] = match dist {
            SignalDistribution::Rademacher => {
                if rng.uniform() < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            SignalDistribution::Gaussian => loop {
                let v = rng.normal();
                if v.abs() >= 1e-3 {
                    break v;
                }
            },
        };
    }
    DenseVector::new(x)
}

/// Gaussian noise rescaled to `||z||_2 = eps` exactly (zero when `eps = 0`).
pub fn gen_noise(n: usize, eps: f64, seed: u64) -> Result<DenseVector> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("noise level must be non-negative, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(DenseVector::zeros(n));
    }
    let mut rng = SplitMix64::new(seed);
    let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    DenseVector::new(z.into_iter().map(|v| v * eps / norm).collect())
}
