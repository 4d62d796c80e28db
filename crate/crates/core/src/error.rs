use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CovertError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CovertError {
    #[error("cannot access {path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },

    // Messages embed their cause directly, so none is exposed as `source()`.
    #[error("malformed input: {0}")]
    Parse(serde_json::Error),

    #[error("row {row} sums to {sum} (deviation {deviation:e} exceeds 1e-9)")]
    RowSum {
        row: usize,
        sum: f64,
        deviation: f64,
    },

    #[error("entry {index} is {value}, probabilities must be finite and nonnegative")]
    InvalidProbability { index: usize, value: f64 },

    #[error("empty alphabet")]
    EmptyAlphabet,

    #[error("channel {name}: {inner}")]
    InChannel {
        name: String,
        inner: Box<CovertError>,
    },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("zero symbol {x0} is not a valid input index (alphabet size {inputs})")]
    ZeroSymbolOutOfRange { x0: usize, inputs: usize },

    #[error("absolute continuity violated at index {index}: p > 0 where q = 0")]
    AbsoluteContinuityViolation { index: usize },

    #[error("chi-squared undefined at index {index}: q = 0 where p != q")]
    DivisionSupportViolation { index: usize },

    #[error("warden output is indistinguishable from the null distribution (chi2 = {value:e})")]
    DegenerateDivergence { value: f64 },

    #[error("covert capacity of user {user} is zero")]
    ZeroCapacity { user: u8 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl From<serde_json::Error> for CovertError {
    fn from(e: serde_json::Error) -> Self {
        CovertError::Parse(e)
    }
}

impl CovertError {
    pub(crate) fn in_channel(self, name: &str) -> Self {
        CovertError::InChannel {
            name: name.to_string(),
            inner: Box::new(self),
        }
    }
}
