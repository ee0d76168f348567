//! Minimal sparse kernel: compressed-row storage, a left-looking sparse LU
//! with partial pivoting, and a Jacobi-preconditioned conjugate gradient.

mod cg;
mod csr;
mod lu;

pub use cg::{cg_solve, CgOptions, CgStats};
pub use csr::SparseMatrix;
pub use lu::SparseLu;

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    crate::math::sqrt(x.iter().map(|v| v * v).sum())
}

/// Largest absolute entry (0 for an empty slice).
pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
