//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:.3e} exceeds tolerance)")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("component weight must be > 0, got {0}")]
    NonPositiveWeight(f64),

    #[error("input must not be empty")]
    EmptyInput,

    #[error("component {index} has zero responsibility mass")]
    DegenerateComponent { index: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("input file is empty")]
    EmptyFile,

    #[error("ragged rows: line {line} has {got} fields, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("model file schema error: {0}")]
    SchemaError(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
