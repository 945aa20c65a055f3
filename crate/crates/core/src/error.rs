//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index out of bounds: {0}")]
    IndexOutOfBounds(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("load error in {file}: {reason}")]
    Load { file: String, reason: String },

    #[error("sparsity pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error(
        "singular linear system in channel(s) {channels:?}; unknown nodes unreachable from any known node: {unreachable:?}"
    )]
    SingularSystem {
        channels: Vec<usize>,
        unreachable: Vec<usize>,
    },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("reconstruction failed in round {round}: {source}")]
    ReconstructionRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
