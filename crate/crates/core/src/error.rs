use std::path::PathBuf;

use thiserror::Error;

use crate::types::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid embeddings: {}", join_diagnostics(.0))]
    InvalidEmbeddings(Vec<Diagnostic>),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },

    #[error("{0}")]
    InvalidParameter(String),

    #[error("zero-norm row {row}")]
    ZeroNormRow { row: usize },

    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("index {index} is already selected")]
    AlreadySelected { index: usize },

    #[error("coreset too large for coverage inversion (n={n}, s={s})")]
    CoresetTooLarge { n: usize, s: usize },

    #[error("class {class}: {reason}")]
    Class { class: u32, reason: String },

    #[error("class {class} has {rows} rows, above the dense-matrix cap of {cap} (~{bytes} bytes per matrix)")]
    ClassTooLarge {
        class: u32,
        rows: usize,
        cap: usize,
        bytes: u128,
    },

    #[error("instance too large for exhaustive search: {combinations} subsets (limit {limit})")]
    InstanceTooLarge { combinations: u128, limit: u128 },

    #[error("unrecognized format: bad magic in {}", .0.display())]
    UnrecognizedFormat(PathBuf),

    #[error("unsupported dtype tag {0}")]
    UnsupportedDtype(u32),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("trailing data: {extra} bytes after payload")]
    TrailingData { extra: u64 },

    #[error("labels line {line}: {message}")]
    Labels { line: u64, message: String },

    #[error("duplicate index {index} at line {line}")]
    DuplicateIndex { index: usize, line: u64 },

    #[error("missing index {0}")]
    MissingIndex(usize),

    #[error("selection references unknown id {0}")]
    UnknownId(u64),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
