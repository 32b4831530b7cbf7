use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("unsupported statement '{what}' at {line}:{col}")]
    Unsupported {
        line: usize,
        col: usize,
        what: String,
    },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("unknown benchmark family '{0}'")]
    UnknownFamily(String),
    #[error("tensor too large: {0} open wires exceeds the limit of {1}")]
    TensorTooLarge(usize, usize),
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{qubits} qubits do not fit a {w}x{h} grid")]
    Capacity { qubits: usize, w: usize, h: usize },
    #[error("invalid pipe diagram: {0}")]
    InvalidPipe(String),
    #[error("embedding failed: {0}")]
    Embed(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
