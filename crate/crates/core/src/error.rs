use thiserror::Error;

/// Errors raised by the analysis and simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("threshold {threshold} excludes all eigenvalues")]
    ThresholdExcludesAll { threshold: f64 },

    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("non-finite integrand value {value} at x = {at} ({context})")]
    NonFinite {
        context: &'static str,
        at: f64,
        value: f64,
    },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
