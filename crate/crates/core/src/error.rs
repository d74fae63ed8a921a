use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, detected before any episode runs.
    #[error("config error: {0}")]
    Config(String),
    /// A caller broke an operation's precondition (length mismatch, empty action set).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A value function produced a non-finite number.
    #[error("divergence: {0}")]
    Divergence(String),
    /// A statistic is undefined on the given input (zero mean, zero Q, too few samples).
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),
    #[error("maze parse error at line {line}: {msg}")]
    Maze { line: usize, msg: String },
    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Contract(_) | Error::Maze { .. } | Error::Json(_) => 2,
            Error::Divergence(_) | Error::UndefinedStatistic(_) => 3,
            Error::Io { .. } | Error::Csv(_) => 4,
        }
    }
}
