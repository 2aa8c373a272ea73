//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by curve construction, configuration checks and estimation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument is outside its mathematical domain.
    #[error("invalid input: {message}")]
    InvalidInput { message: String },

    /// Two pieces of configuration disagree (grid vs. series, weight
    /// dimensions vs. statistics, ...).
    #[error("configuration mismatch: {message}")]
    Config { message: String },

    /// An estimator could not produce a value (empty window, singular
    /// local design, ...).
    #[error("estimation failed: {message}")]
    Estimation { message: String },

    /// A volatility curve dips to zero or below; `value` is the offending
    /// level in the curve's own parameterization (sigma, or sigma^2 for
    /// curves specified through the variance).
    #[error("nonpositive volatility at t = {t} (level {value})")]
    NonPositiveVolatility { t: f64, value: f64 },

    /// A covariance matrix failed its Cholesky factorization.
    #[error("covariance matrix is not symmetric positive definite: {message}")]
    NotPositiveDefinite { message: String },
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput { message: message.into() }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config { message: message.into() }
    }

    pub(crate) fn estimation(message: impl Into<String>) -> Self {
        Error::Estimation { message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
