//! Solver core for generalized Korteweg–de Vries equations on periodic
//! one-dimensional domains,
//!
//! ```text
//!     ∂t u + ∂x f(u) + ε ∂xxx u = 0,
//! ```
//!
//! discretized with continuous Lagrange finite elements of degree 1–3 and
//! integrated with implicit-explicit Runge–Kutta pairs. The hyperbolic flux
//! is advanced explicitly (graph-viscosity low-order update, consistent-mass
//! Galerkin high-order update, FCT blending), the dispersive term implicitly
//! through an auxiliary variable `z ≈ ∂x u`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the `gkdv` companion crate.
//!
//! | module          | contents                                                    |
//! |-----------------|-------------------------------------------------------------|
//! | [`fe`]          | periodic mesh, Lagrange bases, assembled operators, norms   |
//! | [`sparse`]      | CSR matrices, sparse LU, Jacobi-preconditioned CG            |
//! | [`flux`]        | hyperbolic fluxes and Riemann wave-speed bounds              |
//! | [`hyperbolic`]  | graph viscosity, flux maps, low/high-order predictions       |
//! | [`limiter`]     | antidiffusive fluxes and Zalesak limiting                    |
//! | [`dispersive`]  | coupled `(u, z)` implicit update and the operator `G`        |
//! | [`tableau`]     | ERK/EDIRK pairs and the bundled registry                     |
//! | [`driver`]      | Euler-IMEX and staged IMEX steps, time loop                  |
//! | [`scenario`]    | benchmark initial data and exact solutions                   |
//! | [`study`]       | convergence tables and profile diagnostics                  |

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod math;

pub mod dispersive;
pub mod driver;
pub mod fe;
pub mod flux;
pub mod hyperbolic;
pub mod limiter;
pub mod scenario;
pub mod sparse;
pub mod study;
pub mod tableau;

pub use error::{Error, Result};
pub use fe::{FeOperators, Mesh, StateVector};
pub use flux::FluxModel;
pub use tableau::ButcherPair;
