use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid sample statistics: {0}")]
    InvalidStats(String),

    /// A distribution parameter or numeric argument outside its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{path}: empty series (no data rows)")]
    EmptySeries { path: PathBuf },

    #[error("no grid points inside the box at {time}")]
    EmptyBox { time: String },

    #[error("cannot draw {requested} timesteps from a series of length {available}")]
    SubsampleTooLarge { requested: usize, available: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown reference label `{label}`; available labels: {available}")]
    UnknownReference { label: String, available: String },

    #[error("dataset `{label}`: {source}")]
    Dataset {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_dataset(self, label: &str) -> Self {
        match self {
            e @ Error::Dataset { .. } => e,
            e => Error::Dataset {
                label: label.to_string(),
                source: Box::new(e),
            },
        }
    }

    /// Process exit code: 1 config, 2 ingestion, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownReference { .. } | Error::Json { .. } => 1,
            Error::Malformed { .. }
            | Error::EmptySeries { .. }
            | Error::EmptyBox { .. }
            | Error::SubsampleTooLarge { .. }
            | Error::Io { .. } => 2,
            Error::InvalidPrior(_) | Error::InvalidStats(_) | Error::InvalidParameter { .. } => 3,
            Error::Dataset { source, .. } => source.exit_code(),
        }
    }
}
