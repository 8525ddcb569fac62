use std::io;

use thiserror::Error;

use crate::recognizer::Region;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("vector contains a non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("unknown meal `{0}`")]
    UnknownMeal(String),

    #[error("meal has no classes")]
    EmptyTemplateSet,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fine-grained recognition triggered for region {region} but no window features are available")]
    MissingWindowFeatures { region: Region },

    #[error("photo `{0}` has no ground truth")]
    NoGroundTruth(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate variance: correlation is undefined")]
    DegenerateVariance,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("image patch is empty")]
    EmptyPatch,

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(err.into())
        } else {
            Error::Parse(err.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(e) => Error::Io(e),
                _ => unreachable!(),
            }
        } else {
            Error::Parse(err.to_string())
        }
    }
}

impl Error {
    /// True for failures of the underlying reader or writer, as opposed to
    /// bad content or bad parameters.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
