use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lambda = {lambda} is not below 4; the combined blow-up exponent is undefined")]
    LambdaNotBelowFour { lambda: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no escape before t = {time}: F stayed bounded at {value}")]
    HorizonReached { time: f64, value: f64 },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("refusing to overwrite existing output `{}` (use --force)", .0.display())]
    OutputExists(PathBuf),

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
