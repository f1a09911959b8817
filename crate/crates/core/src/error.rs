use thiserror::Error;

/// Errors raised by the toolkit. Variants follow the failure classes of the
/// individual operations so callers can tell a bad argument from a violated
/// precondition.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("alignment error on axis {axis}: {detail}")]
    Alignment { axis: usize, detail: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invariant error: {0}")]
    Invariant(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("precondition error: {0}")]
    Precondition(String),
    #[error("dependency error: {0}")]
    Dependency(String),
    #[error("divergence error: {0}")]
    Divergence(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
