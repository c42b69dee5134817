use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported smoothness nu = {0}; expected one of 1/2, 3/2, 5/2, 7/2, 9/2")]
    UnsupportedNu(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("matrix is not positive definite (failing pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("kernel not supported here: {0}")]
    UnsupportedKernel(String),

    #[error("smoothness values are neither all distinct nor all equal")]
    MixedCase,

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("split too small: {0}")]
    SplitTooSmall(String),

    #[error("mask side {side} does not fit inside a {rows}x{cols} image")]
    MaskTooLarge {
        side: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey {
        path: PathBuf,
        line: usize,
        key: String,
    },

    #[error("invalid kernel spec `{spec}`: {message}")]
    InvalidKernelSpec { spec: String, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("non-finite value in row {row}, column `{column}`")]
    NonFiniteValue { row: usize, column: String },

    #[error("unsupported image format `{0}`")]
    UnsupportedFormat(String),

    #[error("corrupt image header: {0}")]
    CorruptHeader(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_)
            | Error::Parse { .. }
            | Error::UnknownKey { .. }
            | Error::InvalidKernelSpec { .. }
            | Error::InvalidKernel(_)
            | Error::UnsupportedNu(_)
            | Error::UnknownParameter(_)
            | Error::UnsupportedKernel(_)
            | Error::MixedCase
            | Error::SplitTooSmall(_)
            | Error::MaskTooLarge { .. } => 2,
            Error::Csv(_)
            | Error::Io(_)
            | Error::SchemaMismatch(_)
            | Error::NonFiniteValue { .. }
            | Error::UnsupportedFormat(_)
            | Error::CorruptHeader(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
