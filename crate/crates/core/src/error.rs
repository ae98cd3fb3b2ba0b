use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch between {lhs:?} and {rhs:?}")]
    Shape { op: &'static str, lhs: (usize, usize), rhs: (usize, usize) },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("lookup index {index} out of range for table with {size} rows")]
    Lookup { index: usize, size: usize },

    #[error("backward requires a scalar output, got shape {0:?}")]
    NonScalarOutput((usize, usize)),

    #[error("loss: {0}")]
    Loss(String),

    #[error("{0}")]
    Block(String),

    #[error("graph: {0}")]
    Graph(String),

    #[error("{0} produced a non-finite value")]
    NonFinite(&'static str),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("dataset: {0}")]
    Data(String),

    #[error("duplicate interaction for user {user} and item {item}")]
    DuplicateInteraction { user: String, item: String },

    #[error("adaptation: {0}")]
    Adaptation(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("search failed: {0}")]
    Search(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
