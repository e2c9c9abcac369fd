use std::path::PathBuf;

/// Failure classes, each with its own exit status so batch drivers can
/// distinguish missing inputs, bad configs, and numerical failures.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config does not parse: {0}")]
    Parse(String),
    #[error("config field `{path}` invalid: {message}")]
    Invalid { path: String, message: String },
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 2,
            CliError::Parse(_) | CliError::Invalid { .. } => 3,
            CliError::Solver(_) => 4,
        }
    }

    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}
