use std::io;

use thiserror::Error;

use crate::model::{AttributeKind, Violation};

/// Errors produced by dataset handling, filters, and index operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unknown attribute column `{0}`")]
    UnknownColumn(String),

    #[error("column `{column}` has kind {actual}, filter requires {expected}")]
    KindMismatch {
        column: String,
        expected: &'static str,
        actual: AttributeKind,
    },

    #[error("invalid range on `{column}`: low bound exceeds high bound")]
    InvalidRange { column: String },

    #[error("dataset failed validation: {}", summarize(.0))]
    InvalidDataset(Vec<Violation>),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("vector has zero norm")]
    ZeroNorm,

    #[error("non-finite value in vector")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("search width {width} is below k = {k}")]
    WidthBelowK { width: usize, k: usize },

    #[error("unsupported filter: {0}")]
    UnsupportedFilter(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn format(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn summarize(violations: &[Violation]) -> String {
    let mut out = String::new();
    for (i, v) in violations.iter().take(5).enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&v.to_string());
    }
    if violations.len() > 5 {
        out.push_str(&format!("; ... ({} total)", violations.len()));
    }
    out
}
