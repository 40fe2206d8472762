use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A Cholesky pivot fell to or below the tolerance.
    #[error("matrix is not positive definite (pivot {index} = {value:e})")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("quadratic form is negative ({0:e}); matrix is not positive semi-definite")]
    NegativeQuadraticForm(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "Newton iterations did not converge after {iterations} steps (gradient norm {grad_norm:e})"
    )]
    NoConvergence { iterations: usize, grad_norm: f64 },

    #[error("candidate product has {0} elements, limit is 1000000")]
    SizeOverflow(u128),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("trace length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("round {round}: {source}")]
    AtRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn at_round(self, round: usize) -> Self {
        Error::AtRound {
            round,
            source: Box::new(self),
        }
    }

    /// Name of the offending key for configuration errors.
    pub fn config_key(&self) -> Option<&str> {
        match self {
            Error::Config { key, .. } => Some(key),
            _ => None,
        }
    }
}
