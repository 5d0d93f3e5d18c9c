use std::path::PathBuf;

use thiserror::Error;

use crate::graph::UserId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset: no interactions to build a graph from")]
    EmptyDataset,

    #[error("{0}")]
    InvalidParameter(String),

    #[error("no eligible users with degree >= {min_degree}")]
    NoEligibleUsers { min_degree: usize },

    /// The target has no training links, so diffusion has nothing to spread.
    #[error("user {0} has an empty training profile")]
    EmptyProfile(UserId),

    #[error("recall undefined: empty probe set")]
    UndefinedRecall,

    #[error("no evaluable users (every user lacks probe links or training links)")]
    NoEvaluableUsers,

    #[error("a neighbor table is required for {0}")]
    MissingTable(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyDataset => "empty-dataset",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::NoEligibleUsers { .. } => "no-eligible-users",
            Error::EmptyProfile(_) => "empty-profile",
            Error::UndefinedRecall => "undefined-recall",
            Error::NoEvaluableUsers => "no-evaluable-users",
            Error::MissingTable(_) => "missing-table",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
        }
    }
}
