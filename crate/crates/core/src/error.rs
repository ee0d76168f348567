use core::fmt;

use alloc::string::String;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates an operation precondition.
    InvalidInput(String),
    /// Vector or matrix dimensions disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// A direct factorization met a numerically zero pivot.
    SingularMatrix { column: usize },
    /// An iterative solve hit its iteration cap.
    NotConverged {
        iterations: usize,
        relative_residual: f64,
    },
    /// A solve finished but its residual exceeds the contract.
    ResidualTooLarge {
        relative_residual: f64,
        tolerance: f64,
    },
    /// A flux model produced a non-finite value.
    FluxDefect(String),
    /// A Butcher pair fails one of the structural identities.
    InvalidTableau(String),
    /// The explicit step violates the maximum-principle time-step bound.
    CflViolation { tau: f64, tau_star: f64 },
    /// The low-order state handed to the limiter leaves its local bounds.
    BoundsViolation {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    /// The antidiffusive fluxes do not reproduce the high-order update.
    InconsistentFluxes { residual: f64 },
    /// Graph viscosity vanishes and no step cap is configured.
    UnboundedTimeStep,
    /// A stage or step produced NaN or infinity.
    NonFiniteState { time: f64 },
    /// A stage failed; wraps the underlying cause.
    StageFailure {
        stage: usize,
        source: alloc::boxed::Box<Error>,
    },
    /// Unknown flux, scenario or scheme name.
    UnknownName(String),
    /// Malformed registry text.
    Parse { line: usize, message: String },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Self::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Self::SingularMatrix { column } => {
                write!(f, "matrix is numerically singular at column {column}")
            }
            Self::NotConverged { iterations, relative_residual } => write!(
                f,
                "iterative solve did not converge after {iterations} iterations (relative residual {relative_residual:.3e})"
            ),
            Self::ResidualTooLarge { relative_residual, tolerance } => write!(
                f,
                "solve residual {relative_residual:.3e} exceeds tolerance {tolerance:.1e}"
            ),
            Self::FluxDefect(msg) => write!(f, "flux model defect: {msg}"),
            Self::InvalidTableau(msg) => write!(f, "invalid Butcher pair: {msg}"),
            Self::CflViolation { tau, tau_star } => {
                write!(f, "time step {tau:.6e} exceeds the stable bound {tau_star:.6e}")
            }
            Self::BoundsViolation { index, value, lower, upper } => write!(
                f,
                "value {value:.16e} at dof {index} outside local bounds [{lower:.16e}, {upper:.16e}]"
            ),
            Self::InconsistentFluxes { residual } => {
                write!(f, "antidiffusive fluxes miss the high-order update by {residual:.3e}")
            }
            Self::UnboundedTimeStep => {
                write!(f, "graph viscosity vanishes and no maximum time step is configured")
            }
            Self::NonFiniteState { time } => write!(f, "non-finite state at t = {time}"),
            Self::StageFailure { stage, source } => write!(f, "stage {stage} failed: {source}"),
            Self::UnknownName(name) => write!(f, "unknown name `{name}`"),
            Self::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Self::StageFailure { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
