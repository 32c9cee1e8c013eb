use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: String, right: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient capacity: {required} chips required, {available} available")]
    Capacity { required: usize, available: usize },

    #[error("insufficient corpus: {got} images for latent dimension {needed}")]
    InsufficientCorpus { got: usize, needed: usize },

    #[error("inverse filter is singular: |H| = {min_gain:e} with zero regularization")]
    SingularFilter { min_gain: f64 },

    #[error("stage {index} ({stage}) failed: {source}")]
    Stage {
        index: usize,
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed record: {0}")]
    Parse(String),

    #[error("image decode failed for {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
