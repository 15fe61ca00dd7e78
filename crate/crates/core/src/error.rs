use std::path::PathBuf;
use thiserror::Error;

/// Error taxonomy shared by every module.
///
/// Callers that need a process exit code should map categories as follows:
/// parameter, contract, and statistical-validity problems are configuration
/// errors; coverage, resource, io, and format problems are environment
/// errors; invariant violations are bugs.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the operation's stated domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-declared contract does not hold, for example a sequence
    /// whose declared bound is missing or violated.
    #[error("contract error: {0}")]
    Contract(String),

    /// A sign source does not cover the range an operation needs.
    #[error(
        "coverage error: need values on [{needed_lo}, {needed_hi}] but the \
         source covers [{have_lo}, {have_hi}]"
    )]
    Coverage {
        needed_lo: u64,
        needed_hi: u64,
        have_lo: u64,
        have_hi: u64,
    },

    /// An enumeration, memory, or time budget would be exceeded.
    #[error("resource error: {0}")]
    Resource(String),

    /// A sampled estimator's validity condition fails.
    #[error("statistical validity error: {0}")]
    Statistical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// A file exists but its contents are malformed or corrupt.
    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// An internal consistency check failed; this is a bug in the library.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
