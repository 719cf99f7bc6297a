use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("coordinate {value} on axis {axis} is outside the unit cube")]
    OutOfDomain { axis: char, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("exact mode is capped at n = {cap} (got n = {n}); use the Monte-Carlo estimator instead")]
    ExactCapExceeded { n: usize, cap: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("not enough usable data points: {0}")]
    InsufficientData(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn is_unsupported_regime(&self) -> bool {
        matches!(self, Error::UnsupportedRegime(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
