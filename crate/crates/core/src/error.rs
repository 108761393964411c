use std::path::PathBuf;

use thiserror::Error;

use crate::domain::VideoId;

pub type Result<T, E = AuditError> = std::result::Result<T, E>;

/// Every failure the toolkit reports. Each variant maps onto one
/// [`ErrorCategory`], which in turn fixes the process exit code.
#[derive(Debug, Error)]
pub enum AuditError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("{} selected video(s) have no label: {}", ids.len(), preview_ids(ids))]
    IncompleteLabels { ids: Vec<VideoId> },

    #[error("{measure} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        measure: String,
        iterations: usize,
        residual: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn preview_ids(ids: &[VideoId]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids
        .iter()
        .take(SHOWN)
        .map(|id| id.as_str())
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > SHOWN {
        s.push_str(", ...");
    }
    s
}

/// Error categories, each with a distinct exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Parse,
    Parameter,
    Integrity,
    IncompleteLabels,
    NonConvergence,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Parse => 3,
            ErrorCategory::Parameter => 4,
            ErrorCategory::Integrity => 5,
            ErrorCategory::IncompleteLabels => 6,
            ErrorCategory::NonConvergence => 7,
            ErrorCategory::Io => 8,
        }
    }
}

impl AuditError {
    pub fn parameter(msg: impl Into<String>) -> Self {
        AuditError::Parameter(msg.into())
    }

    pub fn integrity(msg: impl Into<String>) -> Self {
        AuditError::Integrity(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        AuditError::Parse {
            line,
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AuditError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            AuditError::Parse { .. } | AuditError::Csv(_) | AuditError::Json(_) => {
                ErrorCategory::Parse
            }
            AuditError::Parameter(_) => ErrorCategory::Parameter,
            AuditError::Integrity(_) => ErrorCategory::Integrity,
            AuditError::IncompleteLabels { .. } => ErrorCategory::IncompleteLabels,
            AuditError::NonConvergence { .. } => ErrorCategory::NonConvergence,
            AuditError::Io { .. } => ErrorCategory::Io,
        }
    }
}
