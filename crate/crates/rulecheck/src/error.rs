use std::path::PathBuf;

use serde::Serialize;

use crate::http::HttpError;
use crate::ingest::IngestError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("stage {stage} needs {path}, which does not exist; run the earlier stage first")]
    MissingInput { stage: &'static str, path: PathBuf },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{context}: {message}")]
    Stage { context: String, message: String },
}

/// Machine-readable failure summary printed by the CLI.
#[derive(Debug, Serialize)]
pub struct ErrorSummary {
    pub status: &'static str,
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn stage(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Stage { context: context.into(), message: message.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Json { .. } => "parse",
            Error::MissingInput { .. } => "stage_dependency",
            Error::Config(_) => "config",
            Error::Http(_) | Error::Ingest(_) => "http",
            Error::Stage { .. } => "stage",
        }
    }

    pub fn summary(&self) -> ErrorSummary {
        let path = match self {
            Error::Io { path, .. } | Error::Json { path, .. } | Error::MissingInput { path, .. } => {
                Some(path.display().to_string())
            }
            _ => None,
        };
        ErrorSummary { status: "error", kind: self.kind(), message: self.to_string(), path }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
