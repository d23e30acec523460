use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid snapshot: {0}")]
    Validation(String),

    #[error("qubit {qubit} has no {property} value")]
    MissingProperty {
        qubit: usize,
        property: &'static str,
    },

    #[error("qubit {index}: quantized offset {quantized} does not fit in {bits} bits")]
    Overflow {
        index: usize,
        quantized: f64,
        bits: u32,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("no registered code corrects {tolerance} bit errors per block")]
    NoCode { tolerance: usize },

    #[error("code {name} rejected: {reason}")]
    CodeRejected { name: String, reason: String },

    #[error("decoding failed in block(s) {blocks:?}")]
    DecodeFailure { blocks: Vec<usize> },

    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for a {qubits}-qubit device")]
    IndexOutOfRange { index: usize, qubits: usize },

    #[error("q-tuple {position}: {source}")]
    Tuple {
        position: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn in_tuple(self, position: usize) -> Self {
        Error::Tuple {
            position,
            source: Box::new(self),
        }
    }

    /// The innermost error, with q-tuple annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Tuple { source, .. } => source.root(),
            other => other,
        }
    }
}
