use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of an operation (bad bid, length mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Instance or input data violates a structural invariant.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A condition the algorithms guarantee on valid input did not hold.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// The sampler lost every interior point of the cutting-plane body.
    #[error("degenerate body: {0}")]
    DegenerateBody(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
