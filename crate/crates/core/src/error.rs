use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LspiError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LspiError {
    #[error("unknown relation id {0}")]
    UnknownRelation(usize),

    #[error("unknown node type `{0}`")]
    UnknownNodeType(String),

    #[error("meta-path `{path}` step {step}: {reason}")]
    Composition {
        path: String,
        step: usize,
        reason: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("minimum-degree path has no edges")]
    ZeroMinimumDegree,

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("missing projection matrix for node type `{0}`")]
    MissingProjection(String),

    #[error("missing gradient for parameter `{0}`")]
    MissingGradient(String),

    #[error("node {0} is not in the labeled mask")]
    Unlabeled(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot stratify: class {class} has {count} labeled nodes (need at least 3)")]
    Stratify { class: usize, count: usize },

    #[error("deleting nodes would empty class {0}")]
    ClassEmptied(usize),

    #[error("graph failed validation: {0}")]
    InvalidGraph(String),

    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    Divergence { iteration: usize, loss: f64 },

    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {message}", file.display())]
    Schema { file: PathBuf, message: String },

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LspiError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LspiError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(
        context: impl Into<String>,
        expected: impl std::fmt::Debug,
        actual: impl std::fmt::Debug,
    ) -> Self {
        LspiError::DimensionMismatch {
            context: context.into(),
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
        }
    }

    /// True for errors caused by the input data rather than by the caller.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, LspiError::InvalidParameter(_))
    }
}
