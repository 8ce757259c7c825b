use std::io;

/// Errors produced by the solver library and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A scenario document could not be parsed. `field` is the JSON path of
    /// the offending value when one is known.
    #[error("parse error at `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("instance too large: {needed} candidate assignments exceeds the bound of {bound}")]
    Capacity { needed: f64, bound: u64 },

    #[error("semidefinite solver failed after {iterations} iterations: {reason} ({residuals})")]
    SolverFailure {
        reason: String,
        iterations: usize,
        residuals: crate::sdp::Residuals,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
