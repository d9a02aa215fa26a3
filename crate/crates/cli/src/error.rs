use brc_core::{BrcError, Finding};
use serde_json::json;

/// Failure of a command, classified by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("parameters failed validation ({} findings)", .0.len())]
    Validation(Vec<Finding>),

    #[error(transparent)]
    Model(#[from] BrcError),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for configuration or data errors, 3 for convergence failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Validation(_) => 2,
            Self::Model(BrcError::NotConverged { .. }) => 3,
            Self::Model(_) => 2,
            Self::Io { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "convergence",
            _ => "io",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let Self::Validation(findings) = self {
            body["findings"] = json!(findings);
        }
        json!({ "error": body })
    }
}

pub type CliResult<T> = Result<T, CliError>;
