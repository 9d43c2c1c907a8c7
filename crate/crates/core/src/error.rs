use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or parameters supplied by the caller.
    Usage,
    /// Input data failed to load or validate.
    Data,
    /// Inputs are valid but the requested quantity is numerically degenerate.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right} scores")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {need} paired items, got {got}")]
    TooFewItems { need: usize, got: usize },

    #[error("non-finite score at position {index}")]
    NonFinite { index: usize },

    #[error("paired differences have zero variance")]
    DegenerateVariance,

    #[error("no discordant pairs (b + c = 0)")]
    DegenerateCounts,

    #[error("{name} = {value} lies outside the admissible interval [{lo:.6}, {hi:.6}]")]
    Inadmissible {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{0} is a stepwise procedure and has no single adjusted level")]
    StepwiseMethod(&'static str),

    #[error("empty family: at least one p-value is required")]
    EmptyFamily,

    #[error("no admissible solution: {0}")]
    NoSolution(String),

    #[error("cluster labels are required for this operation")]
    MissingClusters,

    #[error("need at least {need} clusters, got {got}")]
    TooFewClusters { need: usize, got: usize },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column `{column}`: value {value} outside [0, 1]")]
    OutOfRange {
        line: usize,
        column: String,
        value: String,
    },

    #[error("line {line}, column `{column}`: cannot parse `{value}`")]
    Parse {
        line: usize,
        column: String,
        value: String,
    },

    #[error("line {line}: duplicate item_id `{id}`")]
    DuplicateItem { line: usize, id: String },

    #[error("duplicate model name `{0}` in header")]
    DuplicateModel(String),

    #[error("malformed header: {0}")]
    Header(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DegenerateVariance
            | Error::DegenerateCounts
            | Error::NoSolution(_) => ErrorKind::Numeric,
            Error::InvalidParameter { .. }
            | Error::Inadmissible { .. }
            | Error::StepwiseMethod(_) => ErrorKind::Usage,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
