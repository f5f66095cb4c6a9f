//! Plain-text file formats.
//!
//! Vectors: one decimal value per line; blank lines and lines starting with
//! `#` are skipped. Matrices: CSV, one row per line, no header. Numbers are
//! parsed with Rust's locale-independent float parser.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dense::{DenseVector, SenseMatrix};
use crate::error::{Error, Result};

fn parse_value(token: &str, line: usize) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("line {line}: {token:?}: {e}")))
}

pub fn parse_vector(text: &str) -> Result<DenseVector> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        values.push(parse_value(line, i + 1)?);
    }
    DenseVector::new(values)
}

pub fn parse_matrix(text: &str) -> Result<SenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let row = record
            .iter()
            .map(|tok| parse_value(tok, i + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    SenseMatrix::from_rows(&rows)
}

pub fn read_vector(path: &Path) -> Result<DenseVector> {
    parse_vector(&fs::read_to_string(path)?)
}

pub fn read_matrix(path: &Path) -> Result<SenseMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_vector(path: &Path, v: &DenseVector) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for x in v.iter() {
        writeln!(f, "{x}")?;
    }
    Ok(())
}

pub fn write_matrix(path: &Path, a: &SenseMatrix) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for row in a.to_rows() {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_with_comments() {
        let v = parse_vector("# signal\n1.5\n\n-2e-3\n  # trailing\n0\n").unwrap();
        assert_eq!(v.to_vec(), vec![1.5, -2e-3, 0.0]);
        assert!(parse_vector("1,5\n").is_err());
        assert!(parse_vector("# only comments\n").is_err());
    }

    #[test]
    fn matrix_rows() {
        let a = parse_matrix("1, 2, 3\n4,5,6\n").unwrap();
        assert_eq!((a.rows(), a.cols()), (2, 3));
        assert_eq!(a[(1, 2)], 6.0);
        assert!(parse_matrix("1,2\n3\n").is_err());
        assert!(parse_matrix("1,x\n").is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = SenseMatrix::from_rows(&[vec![0.1, -1.0 / 3.0], vec![1e-300, 7.0]]).unwrap();
        let path = dir.path().join("a.csv");
        write_matrix(&path, &a).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), a);
        let v = DenseVector::new(vec![std::f64::consts::PI, -0.0]).unwrap();
        let path = dir.path().join("v.txt");
        write_vector(&path, &v).unwrap();
        assert_eq!(read_vector(&path).unwrap(), v);
    }
}
