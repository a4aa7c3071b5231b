use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no triples")]
    EmptyInput,

    #[error("unknown entity id {0}")]
    UnknownEntity(u32),

    #[error("unknown relation id {0}")]
    UnknownRelation(u32),

    #[error("unknown entity `{0}`")]
    UnknownEntityName(String),

    #[error("embedding width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("question `{0}` has no topic entity present in the knowledge base")]
    NoTopicEntity(String),

    #[error("subgraph is empty")]
    EmptySubgraph,

    #[error("no topic root is present in the subgraph")]
    NoRootInSubgraph,

    #[error("trees do not share a root")]
    MixedRoots,

    #[error("{0}")]
    InvalidArgument(String),

    #[error("no training signal: {0}")]
    NoTrainingSignal(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
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
