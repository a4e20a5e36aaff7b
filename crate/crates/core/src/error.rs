use std::path::PathBuf;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("decode error: {0}")]
    Decode(String),

    #[error("encode error: {0}")]
    Encode(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("asset error for `{id}`: {reason}")]
    Asset { id: String, reason: String },

    #[error("registry error in {}: {}", path.display(), problems.join("; "))]
    Registry { path: PathBuf, problems: Vec<String> },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numeric error in {stage}: {reason}")]
    Numeric { stage: String, reason: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("task failed: {0}")]
    Task(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }
}
