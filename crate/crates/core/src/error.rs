//! Error type shared by all modules.

use thiserror::Error;

/// Errors reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Arguments violate a precondition (non-finite data, dimension
    /// mismatch, out-of-range parameter).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is unusable (sample too short for the basis,
    /// unsupported backtest horizon, malformed knot grid).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The data carry no usable signal (constant series, all-zero centered
    /// returns, vanishing denominator).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An iterative numerical procedure failed to converge.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The GARCH likelihood optimizer hit its iteration cap. The best point
    /// seen is attached so callers can decide whether it is usable.
    #[error(
        "numeric failure: GARCH optimizer did not converge \
         (best alpha1={alpha1}, beta1={beta1}, loglik={loglik})"
    )]
    GarchNoConvergence {
        alpha1: f64,
        beta1: f64,
        loglik: f64,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad inputs or configuration rather than a
    /// numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::InvalidConfig(_) | Error::DegenerateInput(_)
        )
    }
}
