use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample list")]
    EmptySamples,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("categorical symbol {symbol} out of range for cardinality {cardinality}")]
    SymbolOutOfRange { symbol: usize, cardinality: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{family} does not support {what}")]
    Unsupported { family: String, what: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("log-density is -inf on an observed sample; configure a clip bound B")]
    UnboundedLogDensity,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn unsupported(family: impl std::fmt::Display, what: impl Into<String>) -> Self {
        Error::Unsupported {
            family: family.to_string(),
            what: what.into(),
        }
    }

    /// True for failures of an iterative numerical procedure, as opposed to
    /// bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::UnboundedLogDensity)
    }
}
