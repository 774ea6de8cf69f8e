use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("YᵀY is singular (factor has lost full column rank)")]
    Singular,
    #[error("direction is not a descent direction (slope {0:e})")]
    NonDescent(f64),
    #[error("reference EDM has zero norm")]
    ZeroReference,
    #[error("metric mismatch: vector carries {found:?}, operation uses {expected:?}")]
    MetricMismatch {
        expected: crate::manifold::Metric,
        found: crate::manifold::Metric,
    },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
