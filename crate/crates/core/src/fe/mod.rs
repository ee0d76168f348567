//! Periodic 1D Lagrange finite elements: mesh, reference basis and
//! quadrature, assembled operators, discrete norms.

pub mod basis;
mod mesh;
mod norms;
mod operators;

pub use mesh::{interpolate, Mesh, StateVector};
pub use norms::{error_sample_points, l2_norm, relative_linf_error, weighted_l2_norm};
pub use operators::FeOperators;
