//! Dense real vectors and measurement matrices.
//!
//! Both types are thin wrappers around `nalgebra` storage that reject
//! non-finite entries at construction, so every downstream routine can
//! assume finite data.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A finite real vector of fixed length `p >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseVector(DVector<f64>);

impl DenseVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("vector must have at least one entry"));
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("vector entry {i} is not finite")));
        }
        Ok(DenseVector(DVector::from_vec(entries)))
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len >= 1, "vector must have at least one entry");
        DenseVector(DVector::zeros(len))
    }

    /// Wraps an `nalgebra` vector. Panics on non-finite data; internal
    /// routines only call this on values produced from finite inputs.
    pub(crate) fn from_dvector(v: DVector<f64>) -> Self {
        debug_assert!(!v.is_empty());
        debug_assert!(v.iter().all(|x| x.is_finite()), "non-finite vector entry");
        DenseVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter()
    }

    pub fn norm2(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    /// Indices of entries that are exactly nonzero.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sub(&self, other: &DenseVector) -> Result<DenseVector> {
        check_len(self.len(), other.len())?;
        Ok(DenseVector(&self.0 - &other.0))
    }

    pub fn add(&self, other: &DenseVector) -> Result<DenseVector> {
        check_len(self.len(), other.len())?;
        Ok(DenseVector(&self.0 + &other.0))
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Serialize for DenseVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::domain(format!("length mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// An `n x p` finite measurement matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SenseMatrix(DMatrix<f64>);

impl SenseMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::domain("matrix must have at least one row and one column"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("matrix has a non-finite entry"));
        }
        Ok(SenseMatrix(matrix))
    }

    /// Builds a matrix from row-major rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::domain(format!(
                "row {r} has {} entries, expected {p}",
                rows[r].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        SenseMatrix(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn scaled(&self, c: f64) -> Result<SenseMatrix> {
        SenseMatrix::new(&self.0 * c)
    }

    pub fn mul_vec(&self, x: &DenseVector) -> Result<DenseVector> {
        check_len(self.cols(), x.len())?;
        Ok(DenseVector(&self.0 * x.as_dvector()))
    }

    pub fn transpose_mul_vec(&self, z: &DenseVector) -> Result<DenseVector> {
        check_len(self.rows(), z.len())?;
        Ok(DenseVector(self.0.tr_mul(z.as_dvector())))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for SenseMatrix {
    type Output = f64;

    fn index(&self, ij: (usize, usize)) -> &f64 {
        &self.0[ij]
    }
}
