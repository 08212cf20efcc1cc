use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("malformed data: {0}")]
    MalformedData(String),

    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),

    #[error("non-positive sampling rate")]
    NonPositiveRate,

    #[error("empty trace")]
    EmptyTrace,

    #[error("window of {window} samples is longer than trace of {trace} samples")]
    WindowLongerThanTrace { window: usize, trace: usize },

    #[error("degenerate window")]
    DegenerateWindow,

    #[error("degenerate feature input: {0}")]
    DegenerateFeature(&'static str),

    #[error("input too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("double normalization")]
    DoubleNormalization,

    #[error("matrix is not normalized")]
    NotNormalized,

    #[error("class {0} is empty")]
    EmptyClass(&'static str),

    #[error("class {class} has {count} rows, need at least {need}")]
    ClassTooSmall {
        class: &'static str,
        count: usize,
        need: usize,
    },

    #[error("missing feature {0}")]
    MissingFeature(String),

    #[error("unknown feature {0}")]
    UnknownFeature(String),

    #[error("feature vector is flagged unusable")]
    UnusableVector,

    #[error("non-finite loss at iteration {0}")]
    NonFiniteLoss(usize),

    #[error("empty data")]
    EmptyData,

    #[error("no usable windows")]
    NoUsableWindows,

    #[error("misaligned window grids: {0}")]
    MisalignedGrids(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by the command-line frontend to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Convergence,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidFilter(_) | Error::InvalidParameter(_) | Error::UnknownFeature(_) => {
                ErrorClass::Config
            }
            Error::NonFiniteLoss(_) => ErrorClass::Convergence,
            _ => ErrorClass::Data,
        }
    }
}
