use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing dataset file {0}")]
    MissingFile(PathBuf),

    #[error("line count mismatch: {meta_lines} metadata lines vs {text_lines} text lines")]
    LineCountMismatch {
        meta_lines: usize,
        text_lines: usize,
    },

    #[error("malformed metadata at line {line}: {reason}")]
    MalformedMeta { line: usize, reason: String },

    #[error("unknown split token {token:?} at line {line}")]
    UnknownSplit { line: usize, token: String },

    #[error("document {id:?} (line {line}) is empty after cleaning")]
    EmptyDocument { line: usize, id: String },

    #[error("split ratio {ratio} leaves no validation documents out of {train}")]
    EmptyValidation { ratio: f64, train: usize },

    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    BadRatio(f64),

    #[error("embedding file {0} has no usable lines")]
    NoEmbeddings(PathBuf),

    #[error("window must be at least 2, got {0}")]
    BadWindow(usize),

    #[error("cannot batch an empty list of graphs")]
    EmptyBatch,

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("graph {0} in batch has no real nodes")]
    EmptyGraph(usize),

    #[error("non-finite gradient in tensor {tensor} (batch {batch})")]
    NonFiniteGradient { tensor: String, batch: usize },

    #[error("empty {0} set")]
    EmptySet(&'static str),

    #[error("class {0:?} received no sampled documents")]
    EmptyClass(String),

    #[error("no reference stats for dataset {0:?}")]
    NoReferenceStats(String),

    #[error("statistics of {dataset} differ from the reference: {cells}")]
    StatsMismatch { dataset: String, cells: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
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

    /// Stable machine-readable kind, used by the CLI error line and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MissingFile(_) => "missing_file",
            Error::LineCountMismatch { .. } => "line_count_mismatch",
            Error::MalformedMeta { .. } => "malformed_meta",
            Error::UnknownSplit { .. } => "unknown_split",
            Error::EmptyDocument { .. } => "empty_document",
            Error::EmptyValidation { .. } => "empty_validation",
            Error::BadRatio(_) => "bad_ratio",
            Error::NoEmbeddings(_) => "no_embeddings",
            Error::BadWindow(_) => "bad_window",
            Error::EmptyBatch => "empty_batch",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Shape(_) => "shape",
            Error::EmptyGraph(_) => "empty_graph",
            Error::NonFiniteGradient { .. } => "non_finite_gradient",
            Error::EmptySet(_) => "empty_set",
            Error::EmptyClass(_) => "empty_class",
            Error::NoReferenceStats(_) => "no_reference_stats",
            Error::StatsMismatch { .. } => "stats_mismatch",
            Error::Config(_) => "config",
            Error::Checkpoint(_) => "checkpoint",
            Error::Json(_) => "json",
        }
    }
}
