//! Error type shared by every subcommand. All variants map to exit code 1;
//! usage problems are handled by the argument parser and exit with 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported format: {reason}")]
    UnsupportedFormat { path: String, reason: String },
    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: face with {arity} vertices; only triangles are supported")]
    NonTriangular { path: String, arity: usize },
    #[error("{path}: file ends early: {reason}")]
    TruncatedFile { path: String, reason: String },
    #[error("{path}: {source}")]
    BadJson {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{context}: {message}")]
    Invalid { context: String, message: String },
    #[error("sample {sample}: {message}")]
    Sample { sample: String, message: String },
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn invalid(context: impl Into<String>, message: impl std::fmt::Display) -> Self {
        CliError::Invalid {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
