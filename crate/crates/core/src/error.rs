use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum R2rError {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unknown config key `{key}`; accepted keys: {accepted}")]
    UnknownKey { key: String, accepted: String },

    #[error("malformed data at byte offset {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("silhouette undefined: {0}")]
    UndefinedScore(String),

    #[error("unknown cluster {0}")]
    UnknownCluster(usize),

    #[error("sidecar: {0}")]
    Sidecar(String),

    #[error("stage {stage} failed at task {task}: {source}")]
    Stage {
        stage: &'static str,
        task: usize,
        #[source]
        source: Box<R2rError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image codec: {0}")]
    Image(String),
}

impl R2rError {
    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        R2rError::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        R2rError::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// Innermost error, looking through stage wrappers.
    pub fn root(&self) -> &R2rError {
        match self {
            R2rError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, R2rError>;
