//! Crate-wide error type. Every fallible operation returns [`Result`].

use thiserror::Error;

/// Unified error enum; variants map 1:1 onto the failure classes the
/// library contracts name (parameter validation, degenerate inputs,
/// data-format problems, ...).
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A PRBS register seed that cannot produce a sequence (zero state is
    /// absorbing) or exceeds the register width.
    #[error("invalid seed: {0}")]
    InvalidSeed(String),

    /// Input length does not satisfy a divisibility or matching constraint.
    #[error("length mismatch: {0}")]
    Length(String),

    /// Not enough samples or symbols to run the requested estimator.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Input is degenerate for the requested statistic (zero norm, zero
    /// reference magnitude, zero first-symbol amplitude, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Argument outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An estimator could not produce a usable result.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// Plan search ran over an empty or infeasible grid.
    #[error("no feasible plan: {0}")]
    NoPlan(String),

    /// Scenario configuration rejected; `field` is the dotted key path.
    #[error("config error at {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed or truncated I/Q recording.
    #[error("file format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for config validation failures with a dotted field path.
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
