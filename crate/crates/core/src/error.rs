use thiserror::Error;

use crate::dbaw::Task;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: min {min} must be strictly below max {max}")]
    InvalidDomain { min: f64, max: f64 },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("derivative order {order} exceeds spline degree {degree}")]
    OrderTooHigh { order: usize, degree: usize },

    #[error("non-finite gradient entry at parameter {index}")]
    NonFiniteGradient { index: usize },

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("loss bundle refers to task `{0}` which has no weight or log-variance entry")]
    MissingTask(Task),

    #[error("empty point batch: {0}")]
    EmptyBatch(&'static str),

    #[error("relative error undefined: reference vector has zero norm")]
    ZeroDenominator,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("invalid value for `{field}`: {message}")]
    Constraint { field: String, message: String },

    #[error("runs compare different problems or evaluation grids: {0}")]
    MismatchedProblem(String),

    #[error("malformed parameter blob: {0}")]
    Blob(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn constraint(field: &str, message: impl Into<String>) -> Self {
        Error::Constraint {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
