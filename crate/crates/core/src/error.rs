use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures when parsing an uncertainty map file.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FstuError {
    #[error("bad magic bytes, expected \"FSTU\"")]
    BadMagic,
    #[error("unsupported FSTU version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated FSTU data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("FSTU map contains a negative or non-finite value at index {0}")]
    InvalidValue(usize),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("too few samples: {samples} available, {features} features")]
    TooFewSamples { samples: usize, features: usize },
    #[error("normal equations are ill-conditioned (condition number {cond:.3e}); use lambda > 0")]
    IllConditioned { cond: f64 },
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("uncertainty map: {0}")]
    Fstu(#[from] FstuError),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line tool. Each failure class
    /// maps to a distinct nonzero value.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::MissingInput(_) => 3,
            Error::Io { .. } => 4,
            Error::Image { .. } | Error::Json(_) | Error::Format(_) => 5,
            Error::Fstu(FstuError::BadMagic) => 6,
            Error::Fstu(FstuError::UnsupportedVersion(_)) => 7,
            Error::Fstu(_) => 8,
            Error::DimensionMismatch { .. } => 9,
            Error::TooFewSamples { .. } => 10,
            Error::IllConditioned { .. } => 11,
            Error::NonFinite(_) => 12,
        }
    }
}
