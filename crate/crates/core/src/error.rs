use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at layer {layer}: {detail}")]
    ShapeMismatch { layer: usize, detail: String },

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("non-finite value produced by {0}")]
    NonFiniteValue(String),

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("invalid prior spec: {0}")]
    InvalidPrior(String),

    #[error("layer has zero variance and cannot be standardized")]
    DegenerateLayer,

    #[error("feature-specific prior requested but no class exemplars were supplied")]
    MissingExemplars,

    #[error("{}: bad magic number {found:#010x}, expected {expected:#010x}", .path.display())]
    BadMagic { path: PathBuf, found: u32, expected: u32 },

    #[error("{}: truncated file ({detail})", .path.display())]
    TruncatedFile { path: PathBuf, detail: String },

    #[error("{}: {extra} unexpected trailing bytes", .path.display())]
    TrailingBytes { path: PathBuf, extra: usize },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("class {class} has {available} examples, {requested} requested")]
    InsufficientClassExamples {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("sequence is constant")]
    ConstantSequence,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss at step {step} (seed {seed})")]
    NonFiniteLoss { step: usize, seed: u64 },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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

    pub(crate) fn shape(layer: usize, detail: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            layer,
            detail: detail.into(),
        }
    }
}
