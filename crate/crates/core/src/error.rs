use thiserror::Error;

/// Error classes shared by every module. The CLI maps each class to its own exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("ill-conditioned operator: condition number {0:.3e}")]
    IllConditioned(f64),
    #[error("non-finite sample {value} at ({x}, {y})")]
    NonFinite { x: f64, y: f64, value: String },
    #[error("degenerate fiber: |a'| = {norm:.3e} below {threshold:.3e}")]
    DegenerateFiber { norm: f64, threshold: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
