use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Core(#[from] teq_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset format error: {0}")]
    Format(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Machine-readable error body printed by the CLI.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
}

impl HarnessError {
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::InvalidConfig(_) => "invalid_config",
            HarnessError::Core(teq_core::Error::Config(_)) => "invalid_config",
            HarnessError::Core(_) => "simulation",
            HarnessError::Io(_) => "io",
            HarnessError::Format(_) => "format",
            HarnessError::Csv(_) => "csv",
            HarnessError::Json(_) => "json",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            kind: self.kind(),
            message: self.to_string(),
        }
    }
}
