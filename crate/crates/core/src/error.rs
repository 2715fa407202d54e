use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller supplied an argument outside the operation's domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// Inconsistent configuration, e.g. thresholds in the wrong order.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A file or text buffer did not match its documented layout.
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    /// A least-squares problem could not be solved.
    #[error("fit failed: {msg} (condition number {condition:.3e})")]
    Fit { msg: String, condition: f64 },

    #[error("training failed: {0}")]
    Training(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable tag used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Config(_) => "config",
            Error::Format { .. } => "format",
            Error::Fit { .. } => "fit",
            Error::Training(_) => "training",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
