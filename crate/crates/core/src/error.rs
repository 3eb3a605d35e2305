use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator, the analytics and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {name} = {value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("graph must have at least one vertex")]
    EmptyGraph,

    #[error("size mismatch: expected {expected} vertices, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("vertex {vertex} out of range for a graph on {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid threshold regime: {0}")]
    InvalidRegime(String),

    #[error("enumeration limited to {max} vertices, got {requested}")]
    EnumerationTooLarge { requested: usize, max: usize },

    #[error("absorption system is singular")]
    SingularSystem,

    #[error("unknown table id {0:?} (expected T1..T6)")]
    UnknownTable(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that come from the filesystem or output stream
    /// rather than from invalid input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
