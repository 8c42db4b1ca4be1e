use thiserror::Error;

/// Errors produced by the symmetric-function, function-space, energy and
/// verification layers.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// The order `k` does not satisfy `0 <= k <= n`.
    #[error("order k = {k} is out of range for dimension n = {n}")]
    OrderOutOfRange { k: usize, n: usize },
    /// Non-finite entries, empty inputs, mixed matrix kinds and similar.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A size guard on an exponential-cost routine was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// Lemma bound requested for a point on the cone boundary.
    #[error("cone point is not interior (slack {slack:e}); the bound needs slack > 0")]
    DegenerateMu { slack: f64 },
    /// An argument violates a mathematical precondition of the operation.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A black-box functional returned a value its hypothesis forbids.
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
