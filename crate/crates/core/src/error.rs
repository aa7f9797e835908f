use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("polygon is not simple")]
    NonSimplePolygon,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid weight {value} at {kind} {index}: weights must be >= 1")]
    InvalidWeight {
        kind: &'static str,
        index: usize,
        value: f64,
    },

    #[error("{ty} needs at least {min} points, got {n}")]
    EmptyConfigurationSet {
        ty: &'static str,
        n: usize,
        min: usize,
    },

    #[error("numerical failure: {0}")]
    NumericalError(String),

    #[error("degenerate goal: projected energy is zero")]
    DegenerateGoal,

    #[error("no configurations to search")]
    EmptySearch,

    #[error("no tiling layout for {0}")]
    UnsupportedLayout(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
