use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} outside the domain [0, 1)")]
    Domain { value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported net parameters: {0}")]
    UnsupportedNet(String),

    #[error("point set has {actual} points, a net with these parameters needs {expected}")]
    Cardinality { expected: usize, actual: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integrand returned non-finite value {value} at node {node} ({point:?})")]
    NonFinite {
        node: usize,
        point: Vec<f64>,
        value: f64,
    },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
