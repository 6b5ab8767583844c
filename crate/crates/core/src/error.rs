use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("not a point of the fake cone: {0}")]
    NotOnCone(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
