//! Crate-wide error type.

use thiserror::Error;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum ArpfError {
    /// A vector or matrix had a different dimension than the operation expects.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two feature vectors of different lengths were combined.
    #[error("feature length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A feature vector's payload kind does not match what the estimator combo
    /// or operation requires.
    #[error("payload mismatch: {0}")]
    PayloadMismatch(String),

    /// A parameter was outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested constant is not finite / not defined for this sampler
    /// (heavy-tailed frequency distributions have no first moment).
    #[error("smoothness constant undefined for this sampler: {0}")]
    UndefinedConstant(String),

    /// Normalization would divide by a (near-)zero map inner product.
    #[error("maps are orthogonal (inner product {inner:.3e}); normalized kernel undefined")]
    OrthogonalMaps { inner: f64 },

    /// The operation needs a specific sampler family.
    #[error("operation requires {required} sampler, got {got}")]
    SamplerMismatch {
        required: &'static str,
        got: &'static str,
    },

    /// A distance-map inversion was requested outside the map's range.
    #[error("value {value} outside invertible range [{lo}, {hi})")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    /// The distance map is not strictly monotone, so no inverse exists.
    #[error("distance map is not invertible: {0}")]
    NonInvertible(String),

    /// Training data is degenerate (e.g. a single class).
    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    /// A binary file had a bad magic number, version, or was truncated.
    #[error("format error: {0}")]
    Format(String),

    /// A CSV cell failed to parse; includes 1-based line and column.
    #[error("csv parse error at line {line}, column {column}: {message}")]
    CsvParse {
        line: u64,
        column: usize,
        message: String,
    },

    /// A peer sent a frame that violates the wire protocol.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// The peer reported an error frame.
    #[error("remote error (code {code}): {message}")]
    Remote { code: u8, message: String },

    /// Model/database/draw files disagree on the embedding they were built with.
    #[error("embedding mismatch: {0}")]
    EmbeddingMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    Toml(String),
}

pub type Result<T> = std::result::Result<T, ArpfError>;
