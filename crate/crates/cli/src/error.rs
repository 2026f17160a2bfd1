use std::io;
use std::path::{Path, PathBuf};

use presence_trace_core::trace_model::ValidationReport;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: file not found", path.display())]
    MissingFile { path: PathBuf },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{}: {report}", path.display())]
    Validation { path: PathBuf, report: ValidationReport },
    #[error("{} session(s) could not be modeled", sessions.len())]
    Incomplete { sessions: Vec<(String, String)> },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::MissingFile { .. } => 3,
            Self::Schema { .. } => 4,
            Self::Validation { .. } => 5,
            Self::Incomplete { .. } => 6,
            Self::Io { .. } | Self::Other(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::MissingFile { .. } => "missing-file",
            Self::Schema { .. } => "schema",
            Self::Validation { .. } => "fatal-validation",
            Self::Incomplete { .. } => "model-incomplete",
            Self::Io { .. } => "io",
            Self::Other(_) => "error",
        }
    }

    /// The single-line error record written to stderr.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            Self::MissingFile { path } | Self::Schema { path, .. } | Self::Io { path, .. } => {
                v["path"] = json!(path);
            }
            Self::Validation { path, report } => {
                v["path"] = json!(path);
                v["issues"] = json!(report.fatal().collect::<Vec<_>>());
            }
            Self::Incomplete { sessions } => {
                v["sessions"] = sessions
                    .iter()
                    .map(|(key, reason)| json!({"session": key, "reason": reason}))
                    .collect();
            }
            _ => {}
        }
        v
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            Self::MissingFile { path: path.to_owned() }
        } else {
            Self::Io {
                path: path.to_owned(),
                source,
            }
        }
    }

    pub fn schema(path: &Path, message: impl ToString) -> Self {
        Self::Schema {
            path: path.to_owned(),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
