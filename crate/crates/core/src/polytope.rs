//! Sparse representation of the polytope
//! `T(alpha, t) = { v : ||v||_inf <= alpha, ||v||_1 <= t alpha }`.
//!
//! Every `v` in `T(alpha, t)` is a convex combination of vectors from
//! `U(alpha, t, v)`: vectors supported inside `supp(v)` with at most `t`
//! nonzeros, the same l1 norm as `v`, and entries bounded by `alpha`.
//! [`decompose`] constructs such a combination explicitly.
//!
//! Construction: on the magnitudes `w = |v_S|` the slice
//! `{ u : 0 <= u <= alpha, sum u = ||v||_1 }` is a polytope whose vertices
//! have at most one coordinate strictly between its bounds. Those vertices
//! are `j = floor(||v||_1 / alpha)` entries at `alpha`, possibly one entry at
//! the remainder, zeros elsewhere, so each has at most `t` nonzeros. The
//! vertices are enumerated, a basic feasible solution of
//! `sum_i lambda_i u_i = w, lambda >= 0` is found with a phase-one simplex,
//! and the signs of `v` are put back. Every returned `u_i` therefore agrees in
//! sign with `v`, a strict subset of `U` that is enough for the
//! representation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::combinations::{binomial, Combinations};
use crate::dense::DenseVector;
use crate::error::{Error, Result};

/// Largest support [`decompose`] accepts.
pub const MAX_SUPPORT: usize = 14;

const MEMBERSHIP_RTOL: f64 = 1e-12;
const L1_TOL: f64 = 1e-10;
const RECONSTRUCTION_TOL: f64 = 1e-10;

fn check_params(alpha: f64, t: usize) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    if t == 0 {
        return Err(Error::domain("t must be at least 1"));
    }
    Ok(())
}

/// `||v||_inf <= alpha` and `||v||_1 <= t alpha`, each with relative slack
/// `1e-12`.
pub fn in_polytope(v: &DenseVector, alpha: f64, t: usize) -> bool {
    if check_params(alpha, t).is_err() {
        return false;
    }
    let cap = t as f64 * alpha;
    v.norm_inf() <= alpha * (1.0 + MEMBERSHIP_RTOL) && v.norm1() <= cap * (1.0 + MEMBERSHIP_RTOL)
}

/// Membership of `u` in `U(alpha, t, v)`.
pub fn in_u_set(u: &DenseVector, alpha: f64, t: usize, v: &DenseVector) -> bool {
    if u.len() != v.len() || check_params(alpha, t).is_err() {
        return false;
    }
    let inside = u
        .iter()
        .zip(v.iter())
        .all(|(ui, vi)| *ui == 0.0 || *vi != 0.0);
    let nnz = u.iter().filter(|x| **x != 0.0).count();
    let l1_ok = (u.norm1() - v.norm1()).abs() <= L1_TOL * v.norm1().max(1.0);
    let inf_ok = u.norm_inf() <= alpha + MEMBERSHIP_RTOL * alpha.max(1.0);
    inside && nnz <= t && l1_ok && inf_ok
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Term {
    pub lambda: f64,
    pub u: DenseVector,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolytopeDecomposition {
    pub alpha: f64,
    pub t: usize,
    pub base: DenseVector,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionChecks {
    pub reconstruction_error: f64,
    pub weight_sum_error: f64,
    pub weights_in_unit_interval: bool,
    pub all_members: bool,
    pub sign_aligned: bool,
}

impl DecompositionChecks {
    pub fn passed(&self) -> bool {
        self.all_members
            && self.weights_in_unit_interval
            && self.weight_sum_error <= 1e-12
            && self.reconstruction_error <= RECONSTRUCTION_TOL
    }
}

impl PolytopeDecomposition {
    /// Re-verifies the representation from scratch.
    ///
    /// `reconstruction_error` is `||sum lambda_i u_i - v||_inf` divided by
    /// `max(1, ||v||_inf)`.
    pub fn check(&self) -> DecompositionChecks {
        let p = self.base.len();
        let mut recon = vec![0.0; p];
        for term in &self.terms {
            for (r, x) in recon.iter_mut().zip(term.u.iter()) {
                *r += term.lambda * x;
            }
        }
        let err = recon
            .iter()
            .zip(self.base.iter())
            .fold(0.0_f64, |m, (r, b)| m.max((r - b).abs()));
        let weight_sum: f64 = self.terms.iter().map(|t| t.lambda).sum();
        DecompositionChecks {
            reconstruction_error: err / self.base.norm_inf().max(1.0),
            weight_sum_error: (weight_sum - 1.0).abs(),
            weights_in_unit_interval: self.terms.iter().all(|t| (0.0..=1.0).contains(&t.lambda)),
            all_members: self
                .terms
                .iter()
                .all(|t| in_u_set(&t.u, self.alpha, self.t, &self.base)),
            sign_aligned: self.terms.iter().all(|t| {
                t.u.iter().zip(self.base.iter()).all(|(u, b)| *u == 0.0 || u.signum() == b.signum())
            }),
        }
    }
}

/// Builds a convex combination of members of `U(alpha, t, v)` equal to `v`.
///
/// The output has at most `||v||_0` terms. Refuses supports larger than
/// [`MAX_SUPPORT`].
pub fn decompose(v: &DenseVector, alpha: f64, t: usize) -> Result<PolytopeDecomposition> {
    check_params(alpha, t)?;
    if !in_polytope(v, alpha, t) {
        return Err(Error::domain(format!(
            "vector is outside T(alpha, t): ||v||_inf = {}, ||v||_1 = {}, alpha = {alpha}, t = {t}",
            v.norm_inf(),
            v.norm1()
        )));
    }
    let support = v.support();
    let d = support.len();
    if d > MAX_SUPPORT {
        return Err(Error::budget(format!(
            "support size {d} exceeds the decomposition limit {MAX_SUPPORT}"
        )));
    }
    let single = |u: DenseVector| PolytopeDecomposition {
        alpha,
        t,
        base: v.clone(),
        terms: vec![Term { lambda: 1.0, u }],
    };
    if d <= t {
        // v itself is in U (entries were checked against alpha above).
        return Ok(single(v.clone()));
    }

    // Work in units of alpha on the support magnitudes.
    let w: Vec<f64> = support.iter().map(|&i| (v[i].abs() / alpha).min(1.0)).collect();
    let mass: f64 = w.iter().sum();
    let vertices = vertex_candidates(d, mass);
    let weights = convex_weights(&vertices, &w)?;

    let terms = weights
        .into_iter()
        .map(|(idx, lambda)| {
            let mut u = vec![0.0; v.len()];
            for (slot, &i) in support.iter().enumerate() {
                let mag = vertices[idx][slot];
                if mag != 0.0 {
                    u[i] = v[i].signum() * mag * alpha;
                }
            }
            Ok(Term { lambda, u: DenseVector::new(u)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = PolytopeDecomposition { alpha, t, base: v.clone(), terms };
    let checks = out.check();
    if !checks.passed() {
        return Err(Error::numerical(format!(
            "decomposition failed verification: {checks:?}"
        )));
    }
    Ok(out)
}

/// Vertices of `{ u in [0,1]^d : sum u = mass }` in lexicographic order of
/// the full-entry set, then of the fractional position.
fn vertex_candidates(d: usize, mass: f64) -> Vec<Vec<f64>> {
    let nearest = mass.round();
    let integral = (mass - nearest).abs() <= MEMBERSHIP_RTOL * mass.max(1.0);
    let (full, rem) = if integral {
        (nearest as usize, 0.0)
    } else {
        let j = mass.floor();
        (j as usize, mass - j)
    };
    let per_set = if integral { 1 } else { d - full };
    let mut out = Vec::with_capacity(binomial(d, full) as usize * per_set);
    for set in Combinations::new(d, full) {
        let mut base = vec![0.0; d];
        for &i in &set {
            base[i] = 1.0;
        }
        if integral {
            out.push(base);
            continue;
        }
        for frac in (0..d).filter(|i| base[*i] == 0.0) {
            let mut u = base.clone();
            u[frac] = rem;
            out.push(u);
        }
    }
    out
}

/// Nonnegative weights with `sum_i lambda_i vertices[i] = target`, as
/// `(vertex index, weight)` pairs with positive weight.
fn convex_weights(vertices: &[Vec<f64>], target: &[f64]) -> Result<Vec<(usize, f64)>> {
    let basis = phase_one_basis(vertices, target)?;
    // Polish on the active set: least squares on the equalities plus the
    // (implied) unit-sum row.
    let d = target.len();
    let cols = basis.len();
    let system = DMatrix::from_fn(d + 1, cols, |r, c| {
        if r < d {
            vertices[basis[c]][r]
        } else {
            1.0
        }
    });
    let rhs = DVector::from_fn(d + 1, |r, _| if r < d { target[r] } else { 1.0 });
    let lambda = system
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::numerical(format!("weight polish failed: {e}")))?;
    let mut weights: Vec<(usize, f64)> = basis
        .iter()
        .zip(lambda.iter())
        .filter(|(_, l)| **l > 1e-15)
        .map(|(&i, &l)| (i, l.min(1.0)))
        .collect();
    let total: f64 = weights.iter().map(|(_, l)| l).sum();
    for (_, l) in &mut weights {
        *l /= total;
    }
    weights.sort_by_key(|(i, _)| *i);
    Ok(weights)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Column {
    Artificial(usize),
    Vertex(usize),
}

/// Revised phase-one simplex with Bland's rule. Returns the vertex columns
/// of a feasible basis.
fn phase_one_basis(vertices: &[Vec<f64>], target: &[f64]) -> Result<Vec<usize>> {
    const TOL: f64 = 1e-12;
    let d = target.len();
    let b = DVector::from_column_slice(target);
    let mut basis: Vec<Column> = (0..d).map(Column::Artificial).collect();
    let column = |c: Column| -> DVector<f64> {
        match c {
            Column::Artificial(i) => {
                let mut e = DVector::zeros(d);
                e[i] = 1.0;
                e
            }
            Column::Vertex(j) => DVector::from_column_slice(&vertices[j]),
        }
    };
    let max_pivots = 50 * (vertices.len() + d);
    for _ in 0..max_pivots {
        let bmat = DMatrix::from_columns(&basis.iter().map(|&c| column(c)).collect::<Vec<_>>());
        let lu_t = bmat.transpose().lu();
        let lu = bmat.lu();
        let x_b = lu
            .solve(&b)
            .ok_or_else(|| Error::numerical("singular simplex basis"))?;
        let cost = DVector::from_iterator(
            d,
            basis.iter().map(|c| if matches!(c, Column::Artificial(_)) { 1.0 } else { 0.0 }),
        );
        let duals = lu_t
            .solve(&cost)
            .ok_or_else(|| Error::numerical("singular simplex basis"))?;

        let entering = (0..vertices.len()).find(|&j| {
            !basis.contains(&Column::Vertex(j))
                && -vertices[j].iter().zip(duals.iter()).map(|(a, y)| a * y).sum::<f64>() < -TOL
        });
        let Some(j) = entering else {
            let infeasibility: f64 = basis
                .iter()
                .zip(x_b.iter())
                .filter(|(c, _)| matches!(c, Column::Artificial(_)))
                .map(|(_, x)| x.abs())
                .sum();
            if infeasibility > 1e-9 * target.iter().sum::<f64>().max(1.0) {
                return Err(Error::numerical(format!(
                    "no convex representation found (residual {infeasibility})"
                )));
            }
            return Ok(basis
                .iter()
                .filter_map(|c| match c {
                    Column::Vertex(j) => Some(*j),
                    Column::Artificial(_) => None,
                })
                .collect());
        };
        let dir = lu
            .solve(&column(Column::Vertex(j)))
            .ok_or_else(|| Error::numerical("singular simplex basis"))?;
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..d {
            if dir[r] > TOL {
                let ratio = x_b[r].max(0.0) / dir[r];
                let better = match leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < best - TOL
                            || (ratio <= best + TOL && col_key(basis[r]) < col_key(basis[lr]))
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let (r, _) = leave.ok_or_else(|| Error::numerical("unbounded phase-one direction"))?;
        basis[r] = Column::Vertex(j);
    }
    Err(Error::numerical("simplex pivot limit reached"))
}

fn col_key(c: Column) -> (usize, usize) {
    match c {
        Column::Vertex(j) => (0, j),
        Column::Artificial(i) => (1, i),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn polytope_membership() {
        assert!(in_polytope(&v(&[2.0, 0.0, 0.0]), 2.0, 1));
        assert!(!in_polytope(&v(&[4.0, 0.0]), 2.0, 3));
        assert!(!in_polytope(&v(&[1.0, 1.0, 1.0]), 1.0, 2));
        assert!(in_polytope(&v(&[1.0, -1.0, 1.0]), 1.5, 2));
        assert!(!in_polytope(&v(&[1.0]), 0.0, 2));
    }

    #[test]
    fn u_set_membership() {
        let base = v(&[0.5, -0.25, 0.0, 0.25]);
        assert!(in_u_set(&base, 0.5, 3, &base));
        assert!(!in_u_set(&v(&[0.5, 0.0, 0.5, 0.0]), 0.5, 3, &base));
        // (alpha, ||v||_1 - alpha) on the support
        assert!(in_u_set(&v(&[0.6, -0.4, 0.0, 0.0]), 0.6, 2, &base));
        assert!(!in_u_set(&v(&[0.6, -0.4, 0.0, 0.0]), 0.5, 2, &base));
        assert!(!in_u_set(&v(&[0.4, -0.3, 0.0, 0.3]), 0.6, 2, &base));
        assert!(!in_u_set(&v(&[0.5, -0.25, 0.0, 0.0]), 0.5, 3, &base));
    }

    #[test]
    fn sparse_vector_is_its_own_decomposition() {
        let x = v(&[0.0, 0.7, -0.3, 0.0]);
        let dec = decompose(&x, 1.0, 2).unwrap();
        assert_eq!(dec.terms.len(), 1);
        assert_eq!(dec.terms[0].lambda, 1.0);
        assert_eq!(dec.terms[0].u, x);
        let zero = v(&[0.0, 0.0]);
        assert_eq!(decompose(&zero, 1.0, 1).unwrap().terms.len(), 1);
    }

    #[test]
    fn flat_vector_splits_into_pairs() {
        let alpha = 0.8;
        let x = v(&[alpha / 2.0; 4]);
        let dec = decompose(&x, alpha, 2).unwrap();
        let checks = dec.check();
        assert!(checks.passed(), "{checks:?}");
        assert!(checks.sign_aligned);
        assert!(dec.terms.len() <= 8);
        for term in &dec.terms {
            assert!(term.u.iter().all(|u| *u == 0.0 || (u - alpha).abs() < 1e-15));
        }
    }

    #[test]
    fn boundary_vector_decomposes() {
        let x = v(&[1.0, 1.0, 1.0]);
        let dec = decompose(&x, 1.5, 2).unwrap();
        assert!(dec.check().passed());
        for term in &dec.terms {
            assert!((term.u.norm1() - 3.0).abs() < 1e-12);
            assert_eq!(term.u.iter().filter(|u| **u != 0.0).count(), 2);
        }
        let total: f64 = dec.terms.iter().map(|t| t.lambda).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn signs_are_preserved() {
        let x = v(&[0.3, -0.9, 0.0, 0.45, -0.1, 0.2]);
        let dec = decompose(&x, 1.0, 2).unwrap();
        let checks = dec.check();
        assert!(checks.passed() && checks.sign_aligned, "{checks:?}");
    }

    #[test]
    fn rejects_outside_and_oversized() {
        assert!(matches!(decompose(&v(&[2.0, 0.0]), 1.0, 2), Err(Error::Domain(_))));
        let big = v(&[0.1; 15]);
        assert!(matches!(decompose(&big, 1.0, 2), Err(Error::Budget(_))));
    }

    #[test]
    fn vertex_candidates_have_fixed_mass() {
        let verts = vertex_candidates(5, 2.3);
        assert_eq!(verts.len(), 10 * 3);
        for u in &verts {
            assert!((u.iter().sum::<f64>() - 2.3).abs() < 1e-12);
            assert!(u.iter().filter(|x| **x > 0.0 && **x < 1.0).count() <= 1);
        }
        assert_eq!(vertex_candidates(4, 2.0).len(), 6);
    }
}
