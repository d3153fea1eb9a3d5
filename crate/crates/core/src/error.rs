use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
///
/// Every variant maps to a short reason code (see [`Error::code`]) which the
/// command-line front end prints so failures can be grepped from logs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("`{key}` out of range: {reason}")]
    Domain { key: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value during update: {0}")]
    Divergence(String),

    #[error("no legal action in mask")]
    NoLegalAction,

    #[error("empty episode list")]
    EmptyEpisodes,

    #[error("checkpoint corrupted: {0}")]
    Corrupt(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) => "E_CONFIG",
            Error::Parse(_) => "E_PARSE",
            Error::Domain { .. } => "E_DOMAIN",
            Error::Dimension { .. } => "E_DIMENSION",
            Error::Contract(_) => "E_CONTRACT",
            Error::Divergence(_) => "E_DIVERGENCE",
            Error::NoLegalAction => "E_NO_LEGAL_ACTION",
            Error::EmptyEpisodes => "E_EMPTY",
            Error::Corrupt(_) => "E_CORRUPT",
            Error::Version { .. } => "E_VERSION",
            Error::Io { .. } => "E_IO",
            Error::Usage(_) => "E_USAGE",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(key: &str, reason: impl Into<String>) -> Self {
        Error::Domain {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
