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

    #[error("row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("row {row} has zero norm; cosine similarity is undefined")]
    ZeroNorm { row: usize },

    #[error("graph has zero volume")]
    EmptyGraph,

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("unknown cluster {cluster} (partition has {len} clusters)")]
    UnknownCluster { cluster: usize, len: usize },

    #[error("query has no edge into cluster {cluster}")]
    NoIncidentEdge { cluster: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid encoding tree: {0}")]
    InvalidTree(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph with {n} vertices exceeds the exhaustive-search cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("degenerate variational fit: {0}")]
    Degenerate(String),

    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: usize },

    #[error("token {token} out of range at frame {frame}, stage {stage} (codebook size {size})")]
    TokenOutOfRange {
        frame: usize,
        stage: usize,
        token: usize,
        size: usize,
    },

    #[error("corrupt file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },

    #[error("unsupported format version {found} in {path} (expected {expected})")]
    Version {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
