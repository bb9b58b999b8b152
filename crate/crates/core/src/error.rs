use thiserror::Error;

/// Errors produced by the simulation and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "circulant embedding clipped negative spectral mass {clipped:.3e} (relative L1), above the {limit:.0e} limit"
    )]
    Synthesis { clipped: f64, limit: f64 },

    #[error("time step under-resolves the lattice: dt = {dt} < spacing^2/16 = {limit}")]
    UnderResolved { dt: f64, limit: f64 },

    #[error("partition function underflow: surviving mass {survival:e} is below 1e-300, use a larger grid")]
    Underflow { survival: f64 },

    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("exponent fit needs at least 4 usable points, {0} remain")]
    TooFewPoints(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
