use std::path::PathBuf;

use crate::store::Label;
use crate::CellKey;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters supplied by the caller.
    Usage,
    /// Input data failed validation.
    Data,
    /// A numeric computation produced an unusable value.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: dimension mismatch, expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error(
        "line {line}: duplicate record (question {question_id}, response {response_id}, {label}, n={n_keywords})"
    )]
    DuplicateKey {
        line: usize,
        question_id: u32,
        response_id: u32,
        label: Label,
        n_keywords: u8,
    },

    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },

    #[error("line {line}: invalid record: {reason}")]
    InvalidRecord { line: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "question {question_id} ({label}, n={n_keywords}) has {found} responses, {needed} required"
    )]
    InsufficientResponses {
        question_id: u32,
        label: Label,
        n_keywords: u8,
        needed: usize,
        found: usize,
    },

    #[error("records mix vector dimensions {0} and {1}")]
    MixedDimensions(usize, usize),

    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("non-finite input value")]
    NonFinite,

    #[error("distance overflowed to infinity")]
    Overflow,

    #[error("need at least {needed} values, got {found}")]
    TooFew { needed: usize, found: usize },

    #[error("cell key mismatch: {0}")]
    KeyMismatch(String),

    #[error("cell {key}: {source}")]
    Cell {
        key: CellKey,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_) => ErrorKind::Usage,
            Error::Overflow | Error::NonFinite => ErrorKind::Numeric,
            Error::Cell { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn in_cell(self, key: CellKey) -> Error {
        match self {
            e @ Error::Cell { .. } => e,
            e => Error::Cell {
                key,
                source: Box::new(e),
            },
        }
    }
}
