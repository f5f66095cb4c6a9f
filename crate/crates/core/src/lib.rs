//! Sparse recovery by nonconvex lq minimization, with exact restricted
//! isometry constants at desk scale and certification of the RIC-based
//! recovery condition `delta_{(s^q+1)k} < 1 / sqrt(s^(q-2) + 1)`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combinations;
pub mod dense;
pub mod error;
pub mod guarantee;
pub mod harness;
pub mod io;
pub mod norms;
pub mod polytope;
pub mod ric;
pub mod rng;
pub mod solver;

pub use dense::{DenseVector, SenseMatrix};
pub use error::{Error, Result};
