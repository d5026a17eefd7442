use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("symmetric eigendecomposition did not converge for a {dim}x{dim} matrix")]
    EigenFailure { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("clip set is empty")]
    EmptyClipSet,

    #[error("bad magic bytes {found:?}, expected \"FVDF\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported feature file version {0}")]
    UnsupportedVersion(u32),

    #[error("unsupported feature dtype code {0}")]
    UnsupportedDtype(u8),

    #[error("truncated feature file: needed {needed} bytes at offset {offset}, {available} available")]
    TruncatedPayload {
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("feature file has {0} unexpected trailing bytes")]
    TrailingBytes(usize),

    #[error("id count {ids} does not match row count {rows}")]
    IdCountMismatch { ids: usize, rows: usize },

    #[error("duplicate row id {0:?}")]
    DuplicateId(String),

    #[error("invalid utf-8 in {0}")]
    InvalidUtf8(&'static str),

    #[error("clip {clip:?} is missing frame {index} ({path})")]
    MissingFrame {
        clip: String,
        index: usize,
        path: PathBuf,
    },

    #[error("checksum mismatch for clip {clip:?}: manifest {expected}, computed {actual}")]
    ChecksumMismatch {
        clip: String,
        expected: String,
        actual: String,
    },

    #[error("extractor {0:?} is already registered")]
    DuplicateTag(String),

    #[error("extractor {0:?} is not available")]
    ExtractorUnavailable(String),

    #[error("feature ids do not cover the clip set; missing: {missing:?}")]
    IdMismatch { missing: Vec<String> },

    #[error("chunk {start}..{end} exceeds clip length {len}")]
    ChunkOutOfRange { start: usize, end: usize, len: usize },

    #[error("extractor {tag:?} does not accept {frames}-frame clips")]
    ExtractorLengthUnsupported { tag: String, frames: usize },

    #[error("optimization aborted at step {step}: {reason}")]
    OptimizationAborted {
        step: usize,
        reason: String,
        trace: Vec<f64>,
    },

    #[error("image error at {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFiniteInput { .. } => "NonFiniteInput",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::EigenFailure { .. } => "EigenFailure",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NumericalInstability(_) => "NumericalInstability",
            Error::InvalidInput(_) => "InvalidInput",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::EmptyClipSet => "EmptyClipSet",
            Error::BadMagic { .. } => "BadMagic",
            Error::UnsupportedVersion(_) => "UnsupportedVersion",
            Error::UnsupportedDtype(_) => "UnsupportedDtype",
            Error::TruncatedPayload { .. } => "TruncatedPayload",
            Error::TrailingBytes(_) => "TrailingBytes",
            Error::IdCountMismatch { .. } => "IdCountMismatch",
            Error::DuplicateId(_) => "DuplicateId",
            Error::InvalidUtf8(_) => "InvalidUtf8",
            Error::MissingFrame { .. } => "MissingFrame",
            Error::ChecksumMismatch { .. } => "ChecksumMismatch",
            Error::DuplicateTag(_) => "DuplicateTag",
            Error::ExtractorUnavailable(_) => "ExtractorUnavailable",
            Error::IdMismatch { .. } => "IdMismatch",
            Error::ChunkOutOfRange { .. } => "ChunkOutOfRange",
            Error::ExtractorLengthUnsupported { .. } => "ExtractorLengthUnsupported",
            Error::OptimizationAborted { .. } => "NumericalInstability",
            Error::Image { .. } => "ImageError",
            Error::Json(_) => "JsonError",
            Error::Io(_) => "IoError",
        }
    }

    /// True for failures of the numerical machinery as opposed to I/O or input format problems.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteInput { .. }
                | Error::NotSymmetric { .. }
                | Error::EigenFailure { .. }
                | Error::NumericalInstability(_)
                | Error::OptimizationAborted { .. }
        )
    }

    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
