use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {edge_index}: {field} {id} out of range (num_vertices = {num_vertices})")]
    VertexOutOfRange {
        edge_index: usize,
        field: &'static str,
        id: usize,
        num_vertices: usize,
    },

    #[error(
        "edge {edge_index}: type {edge_type} out of range (num_edge_types = {num_edge_types})"
    )]
    EdgeTypeOutOfRange {
        edge_index: usize,
        edge_type: usize,
        num_edge_types: usize,
    },

    #[error("a graph needs at least one edge type")]
    NoEdgeTypes,

    #[error("graph already carries self-edges (type {self_type})")]
    AlreadyAugmented { self_type: usize },

    #[error("graph has no self-edges; call add_self_edges first")]
    NotAugmented,

    #[error("metapath length {got} is invalid here (minimum {min})")]
    InvalidLength { got: usize, min: usize },

    #[error("positions {start}..={end} exceed the score table's {available} positions")]
    PositionOverflow {
        start: usize,
        end: usize,
        available: usize,
    },

    #[error("edge type {edge_type} has no score column (table has {num_types})")]
    UnknownScoreType { edge_type: usize, num_types: usize },

    #[error("shape mismatch for {what}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("vertex count mismatch: {left} vs {right}")]
    VertexCountMismatch { left: usize, right: usize },

    #[error("walk {walk} step {step}: no edge {src} -> {dst} of type {edge_type} in the graph")]
    StaleWalk {
        walk: usize,
        step: usize,
        src: usize,
        dst: usize,
        edge_type: usize,
    },

    #[error("walk set was sampled for length {walks}, expected {expected}")]
    WalkLengthMismatch { walks: usize, expected: usize },

    #[error("dense oracle supports at most {max} vertices, got {n}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("score table entries must be finite")]
    NonFiniteScore,

    #[error("mask is empty")]
    EmptyMask,

    #[error("vertex {vertex} is in the mask but has no label")]
    MissingLabel { vertex: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing dataset file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),

    #[error("{}: {source}", path.display())]
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
}
