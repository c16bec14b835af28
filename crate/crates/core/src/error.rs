use thiserror::Error;

/// Errors raised by the engine. Validation problems and solver failures are
/// kept apart so callers can map them to different exit paths.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("non-finite result: {0}")]
    NonFinite(String),
    #[error("too many options for exact enumeration: {0} (max 8)")]
    TooManyOptions(usize),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("did not converge: {0}")]
    NonConvergence(String),
}

impl Error {
    /// True for failures of numerical procedures rather than bad inputs.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::NonConvergence(_) | Error::Infeasible(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
