use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Io,
    Validation,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("alist line {line}: {msg}")]
    Alist { line: usize, msg: String },

    #[error("invalid parity-check matrix: {0}")]
    InvalidCode(String),

    #[error("protograph lifting: {0}")]
    Lifting(String),

    #[error("puncturing: {0}")]
    Puncture(String),

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input LLR at position {0}")]
    NonFiniteLlr(usize),

    #[error("decoder configuration: {0}")]
    DecodeConfig(String),

    #[error("unknown stop rule `{0}`")]
    UnknownStopRule(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("unphysical parameters: {0}")]
    Unphysical(String),

    #[error("no modulation variance reaches I_AB = {0} bits/pulse")]
    NoSolution(f64),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{context}: {msg}")]
    Csv { context: String, msg: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no records with policy label `{0}`")]
    MissingPolicy(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::UnknownStopRule(_) | Error::DecodeConfig(_) => {
                ErrorKind::Config
            }
            Error::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
