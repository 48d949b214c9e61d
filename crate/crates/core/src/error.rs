use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty text")]
    EmptyText,

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{source} (prefix {prefix})")]
    Prefix {
        prefix: usize,
        #[source]
        source: ProviderError,
    },

    #[error(transparent)]
    Provider(#[from] ProviderError),

    #[error("{path}: line {line}: {message}")]
    Corpus {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{failed} of {total} records failed, above the {threshold} failure threshold")]
    PartialFailure {
        failed: usize,
        total: usize,
        threshold: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure originated at the language-model provider.
    pub fn is_provider(&self) -> bool {
        matches!(self, Error::Provider(_) | Error::Prefix { .. })
    }
}

/// Failures surfaced by a [`crate::scoring::LogprobProvider`].
///
/// Every variant carries enough metadata for a caller to decide whether a
/// retry makes sense.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },

    #[error("malformed provider response: {0}")]
    Malformed(String),

    #[error("provider returned status {status}: {message}")]
    Rejected {
        status: u16,
        message: String,
        attempts: u32,
    },

    #[error("unscorable text: {0}")]
    Unscorable(String),
}

impl ProviderError {
    pub fn retryable(&self) -> bool {
        match self {
            ProviderError::Transport { .. } => true,
            ProviderError::Rejected { status, .. } => *status == 429 || *status >= 500,
            ProviderError::Malformed(_) | ProviderError::Unscorable(_) => false,
        }
    }

    pub fn attempts(&self) -> u32 {
        match self {
            ProviderError::Transport { attempts, .. } | ProviderError::Rejected { attempts, .. } => {
                *attempts
            }
            _ => 1,
        }
    }
}
