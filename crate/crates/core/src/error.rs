use std::io;

use thiserror::Error;

/// Errors produced while reading or validating traces.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: `{value}` is not a number")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("row {row}: frequency {freq_mhz} MHz is not in the frequency table")]
    UnknownFrequency { row: usize, freq_mhz: f64 },
    #[error("row {row}: {reason}")]
    InvalidValue { row: usize, reason: String },
    #[error("missing or malformed header: {0}")]
    Header(String),
}

/// Top-level error for the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("invalid frequency table: {0}")]
    FrequencyTable(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("feature spec does not match the trace: {0}")]
    SpecMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Degenerate(_) => 3,
            Error::SpecMismatch(_) => 4,
            Error::Unsupported(_) => 5,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
