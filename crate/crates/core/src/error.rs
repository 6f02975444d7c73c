use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state corruption: {0}")]
    StateCorruption(String),

    #[error("numeric corruption at tick {tick}: {reason}")]
    TickCorruption { tick: u64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("time {t} s is outside [0, {duration}] s")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("log does not cover [{from:.3}, {to:.3}] s")]
    IncompleteLog { from: f64, to: f64 },

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
