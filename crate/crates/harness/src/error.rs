use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: item '{token}' appears more than once in one ranking")]
    DuplicateToken { line: usize, column: usize, token: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] igm_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Io { .. } => "io",
            HarnessError::Parse { .. } => "parse",
            HarnessError::DuplicateToken { .. } => "duplicate_item",
            HarnessError::Config(_) => "config",
            HarnessError::Model(_) => "model",
            HarnessError::Json(_) => "json",
            HarnessError::Csv(_) => "csv",
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            HarnessError::Parse { line, .. } | HarnessError::DuplicateToken { line, .. } => Some(*line),
            _ => None,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
