use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("connectivity file {path}: {message}")]
    Connectivity { path: PathBuf, message: String },

    #[error("record {index}: {message}")]
    Schema { index: usize, message: String },

    #[error("line {line}: {message}")]
    PredictionLine { line: usize, message: String },

    #[error("duplicate instr_id values: {}", .0.join(", "))]
    DuplicateInstrIds(Vec<String>),

    #[error("node `{node}` is not in graph `{graph_id}`")]
    UnknownNode { graph_id: String, node: String },

    #[error("node index {index} out of range for graph `{graph_id}` with {len} nodes")]
    NodeIndexOutOfRange {
        graph_id: String,
        index: usize,
        len: usize,
    },

    #[error("graph mismatch: expected `{expected}`, found `{found}`")]
    GraphMismatch { expected: String, found: String },

    #[error("no graph loaded for `{0}`")]
    MissingGraph(String),

    #[error("path is empty")]
    EmptyPath,

    #[error("`{to}` is unreachable from `{from}` in graph `{graph_id}`")]
    Unreachable {
        graph_id: String,
        from: String,
        to: String,
    },

    #[error("reference path has infinite length (it crosses disconnected components)")]
    DisconnectedReference,

    #[error("path is not navigable: {0}")]
    NotNavigable(String),

    #[error("invalid threshold {0}: thresholds must be finite and positive")]
    InvalidThreshold(f64),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("oracle cache {path}: {message}")]
    Cache { path: PathBuf, message: String },

    #[error("nothing to evaluate: {0}")]
    NothingToEvaluate(String),

    #[error("invalid fixture spec: {0}")]
    Fixture(String),

    #[error("json error: {0}")]
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
