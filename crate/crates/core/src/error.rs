use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid UTF-8 at byte offset {offset}")]
    Utf8 { path: PathBuf, offset: usize },

    #[error("no documents")]
    NoDocuments,

    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid format: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("k = {k} must be smaller than the number of points ({n})")]
    TooFewPoints { k: usize, n: usize },

    #[error("Calinski-Harabasz index undefined for {0} cluster(s)")]
    ChUndefined(usize),

    #[error("no clusters")]
    NoClusters,

    #[error("no valid clustering")]
    NoValidClustering,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
