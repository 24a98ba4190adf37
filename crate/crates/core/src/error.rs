use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum CglError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid input data: {0}")]
    Input(String),

    #[error("capability limit exceeded: {0}")]
    Capability(String),

    #[error("solver did not converge after {iterations} iterations (kkt violation {violation:.3e})")]
    NotConverged {
        iterations: usize,
        violation: f64,
        best: Box<crate::solver::Solution>,
    },

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("mapping error: {0}")]
    Mapping(String),

    #[error("quadratic program did not converge: {0}")]
    QpNotConverged(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CglError>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CglError::Shape(msg.into()))
}
