//! Configuration files, CSV output, invariant checks and the command line
//! front end for `gkdv-core`.

pub mod app;
pub mod checks;
pub mod config;
pub mod output;
