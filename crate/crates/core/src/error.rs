use std::path::PathBuf;

use crate::history::CommitId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid file path {0:?}: {1}")]
    InvalidPath(String, &'static str),

    #[error("invalid commit id {0:?}: expected 40 lowercase hex characters")]
    InvalidCommitId(String),

    #[error("unknown commit {0}")]
    UnknownCommit(CommitId),

    #[error("commit {0} is not a merge commit")]
    NotAMerge(CommitId),

    #[error("malformed commit graph: {0}")]
    Graph(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("confidence undefined: antecedent has zero support")]
    UndefinedConfidence,

    #[error("{0} is undefined over an empty set")]
    Undefined(&'static str),

    #[error("snapshot {path}:{line}: {message}")]
    Snapshot {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("ingest failed{}: {message}", commit.as_ref().map(|c| format!(" at commit {c}")).unwrap_or_default())]
    Ingest {
        commit: Option<String>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
