use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    #[error("validation error ({field}): {message}")]
    Validation { field: String, message: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("backend unavailable for `{tag}` after {attempts} attempt(s): {message}")]
    BackendUnavailable {
        tag: String,
        attempts: u32,
        message: String,
    },

    #[error("replay miss for `{tag}`: digest {digest} not in log")]
    ReplayMiss { tag: String, digest: String },

    #[error("invalid strategy parameter: {0}")]
    InvalidStrategyParam(String),

    #[error("lexicon has no triggers for event type(s): {}", .0.join(", "))]
    EmptyLexiconFor(Vec<String>),

    #[error("template `{template}`: {message}")]
    Template { template: String, message: String },

    #[error("alignment error: {0}")]
    Alignment(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable category used by the CLI's error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::DuplicateId(_) => "duplicate_id",
            Error::EmptyCorpus => "empty_corpus",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::BackendUnavailable { .. } => "backend_unavailable",
            Error::ReplayMiss { .. } => "replay_miss",
            Error::InvalidStrategyParam(_) => "invalid_strategy_param",
            Error::EmptyLexiconFor(_) => "empty_lexicon",
            Error::Template { .. } => "template",
            Error::Alignment(_) => "alignment",
        }
    }
}
