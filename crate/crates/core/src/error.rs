use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node index {index} out of range for {count} nodes")]
    InvalidNode { index: usize, count: usize },

    #[error("graph is not connected from anchor {anchor}: {unreached} node(s) unreachable")]
    Disconnected { anchor: usize, unreached: usize },

    #[error("unconnectable topology: no connected placement after {attempts} attempts")]
    UnconnectableTopology { attempts: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for trace of length {len}")]
    IterationOutOfRange { index: usize, len: usize },

    #[error("protocol violation: node {dst} received a state request from non-neighbor {src}")]
    NotNeighbor { src: usize, dst: usize },

    #[error("liveness failure: no update for {idle_ticks} ticks (limit {limit_ticks})")]
    Liveness { idle_ticks: u64, limit_ticks: u64 },

    #[error("eigensolver failed to converge")]
    Eigensolver,

    #[error("malformed edge list at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
