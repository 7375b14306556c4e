use std::fmt;

/// Broad failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad parameters or malformed input data.
    Data,
    /// A numerical procedure could not produce a defined result.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("timescales are matched (r = 1); peak time is undefined")]
    DegenerateRates,

    #[error("missing window: {0}")]
    MissingWindow(String),

    #[error("conditioning class `{0}` has no trials")]
    UndefinedClass(&'static str),

    #[error("only one class present: {0}")]
    SingleClass(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {reason}")]
    Parse {
        row: u64,
        column: String,
        reason: String,
    },

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl fmt::Display) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.to_string(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::DegenerateVariance(_)
            | Error::DegenerateRates
            | Error::Divergence { .. }
            | Error::SingleClass(_)
            | Error::UndefinedClass(_) => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
