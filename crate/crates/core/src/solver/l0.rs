use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::combinations::{binomial, Combinations};
use crate::dense::{DenseVector, SenseMatrix};
use crate::error::{Error, Result};
use crate::ric::DEFAULT_ENUMERATION_BUDGET;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L0Solution {
    pub x: DenseVector,
    pub k: usize,
    /// Lexicographically smallest fitting support of size `k`.
    pub support: Vec<usize>,
    /// Number of size-`k` supports that fit; 1 means the sparsest solution
    /// is unique up to its values on that support.
    pub fitting_supports: usize,
    pub residual2: f64,
}

/// Sparsest solution of `Ax = y` up to `kmax` nonzeros, by exhaustive
/// least-squares fits over supports in lexicographic order.
///
/// A support fits when its least-squares residual is at most `res_tol`.
/// Returns `None` when no support of size `<= kmax` fits.
pub fn l0_oracle(a: &SenseMatrix, y: &DenseVector, kmax: usize, res_tol: f64) -> Result<Option<L0Solution>> {
    l0_oracle_with_budget(a, y, kmax, res_tol, DEFAULT_ENUMERATION_BUDGET)
}

pub fn l0_oracle_with_budget(
    a: &SenseMatrix,
    y: &DenseVector,
    kmax: usize,
    res_tol: f64,
    budget: u128,
) -> Result<Option<L0Solution>> {
    let (n, p) = (a.rows(), a.cols());
    if y.len() != n {
        return Err(Error::domain(format!("measurement length {} != {n} rows", y.len())));
    }
    if kmax == 0 || kmax > p {
        return Err(Error::domain(format!("kmax must lie in 1..={p}, got {kmax}")));
    }
    if !(res_tol > 0.0) {
        return Err(Error::domain("res_tol must be positive"));
    }
    let total: u128 = (1..=kmax).map(|k| binomial(p, k)).fold(0u128, u128::saturating_add);
    if total > budget {
        return Err(Error::budget(format!(
            "{total} supports up to size {kmax} exceed the enumeration budget {budget}"
        )));
    }

    if y.norm2() <= res_tol {
        return Ok(Some(L0Solution {
            x: DenseVector::zeros(p),
            k: 0,
            support: Vec::new(),
            fitting_supports: 1,
            residual2: y.norm2(),
        }));
    }

    let m = a.as_dmatrix();
    let yv = y.as_dvector();
    for k in 1..=kmax {
        let mut first: Option<(Vec<usize>, DVector<f64>, f64)> = None;
        let mut count = 0;
        for support in Combinations::new(p, k) {
            let sub = DMatrix::from_fn(n, k, |i, j| m[(i, support[j])]);
            let coef = sub
                .clone()
                .svd(true, true)
                .solve(yv, 1e-13)
                .map_err(|e| Error::numerical(format!("least squares failed: {e}")))?;
            let res = (&sub * &coef - yv).norm();
            if res <= res_tol {
                count += 1;
                if first.is_none() {
                    first = Some((support, coef, res));
                }
            }
        }
        if let Some((support, coef, res)) = first {
            let mut x = vec![0.0; p];
            for (j, &i) in support.iter().enumerate() {
                x[i] = coef[j];
            }
            return Ok(Some(L0Solution {
                x: DenseVector::new(x)?,
                k,
                support,
                fitting_supports: count,
                residual2: res,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn identity_finds_the_support() {
        let y = v(&[0.0, 2.0, 0.0, -1.0]);
        let sol = l0_oracle(&SenseMatrix::identity(4), &y, 3, 1e-9).unwrap().unwrap();
        assert_eq!(sol.k, 2);
        assert_eq!(sol.support, vec![1, 3]);
        assert_eq!(sol.fitting_supports, 1);
        for (a, b) in sol.x.iter().zip(y.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_measurements_need_no_support() {
        let sol = l0_oracle(&SenseMatrix::identity(3), &v(&[0.0, 0.0, 0.0]), 2, 1e-9)
            .unwrap()
            .unwrap();
        assert_eq!(sol.k, 0);
        assert!(sol.x.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn duplicate_columns_resolve_to_lower_index() {
        let a = SenseMatrix::from_rows(&[
            vec![0.3, 1.0, 0.0, 1.0],
            vec![0.7, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let sol = l0_oracle(&a, &v(&[1.0, 0.0]), 2, 1e-9).unwrap().unwrap();
        assert_eq!(sol.k, 1);
        assert_eq!(sol.support, vec![1]);
        assert_eq!(sol.fitting_supports, 2);
    }

    #[test]
    fn none_when_nothing_fits() {
        let a = SenseMatrix::from_rows(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 0.0]]).unwrap();
        assert!(l0_oracle(&a, &v(&[0.0, 0.0, 1.0]), 3, 1e-9).unwrap().is_none());
    }

    #[test]
    fn budget_is_enforced() {
        let a = SenseMatrix::identity(30);
        let y = v(&[1.0; 30]);
        let err = l0_oracle_with_budget(&a, &y, 10, 1e-9, 1000).unwrap_err();
        assert!(matches!(err, Error::Budget(_)));
    }
}
