use std::fmt;

use serde_json::json;

/// Exit code 1.
pub const EXIT_CONFIG: i32 = 1;
/// Exit code 2.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug)]
pub struct CliError {
    pub exit_code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn config(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            exit_code: EXIT_CONFIG,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn runtime(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            exit_code: EXIT_RUNTIME,
            kind: kind.into(),
            message: message.into(),
        }
    }

    /// The single JSON line printed first on stderr.
    pub fn machine_line(&self) -> String {
        json!({ "error": self.kind, "exit_code": self.exit_code, "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<edsynth_core::Error> for CliError {
    fn from(e: edsynth_core::Error) -> Self {
        use edsynth_core::Error::*;
        let exit_code = match &e {
            Parse { .. } | Validation { .. } | DuplicateId(_) | InvalidArgument(_)
            | InvalidStrategyParam(_) | Template { .. } => EXIT_CONFIG,
            Io { .. } | EmptyCorpus | BackendUnavailable { .. } | ReplayMiss { .. }
            | EmptyLexiconFor(_) | Alignment(_) => EXIT_RUNTIME,
        };
        CliError {
            exit_code,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
