use thiserror::Error;

/// Errors produced by the numerical routines and the experiment harness.
#[derive(Debug, Error)]
pub enum LogdpError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    /// Two objects that must agree in size do not.
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// An iterative method ran out of iterations or lost its bracket.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// A root bracket could not be established.
    #[error("no sign change: {0}")]
    NoBracket(String),

    /// A solver iterate collapsed onto the trivial solution.
    #[error("collapse to zero: {0}")]
    Collapse(String),

    #[error("config error: {0}")]
    Config(String),

    /// A structural assumption on the exponents or the right-hand side fails.
    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("expression error at {pos}: {msg}")]
    Expr { pos: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LogdpError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LogdpError::Domain(msg.into()))
}
