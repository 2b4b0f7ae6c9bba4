use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("invalid GeoJSON: {0}")]
    GeoJson(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grids are not aligned: {0}")]
    Misaligned(String),

    #[error("tiles disagree at row {row}, col {col} of the merged grid")]
    MergeConflict { row: usize, col: usize },

    #[error("cell ({row}, {col}) is outside a {n_rows}x{n_cols} grid")]
    OutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("channel cannot be normalized: {0}")]
    Degenerate(String),

    #[error("unknown water type {0:?} (not in the weight table)")]
    UnknownType(String),

    #[error("label {0} has no entry in the weight table")]
    UnknownLabel(u16),

    #[error("every cell has zero weight")]
    AllWeightsZero,

    #[error("cell ({row}, {col}) is not a waterway cell")]
    NotWaterway { row: usize, col: usize },

    #[error("input is not a skeleton: 2x2 foreground block at row {row}, col {col}")]
    NotSkeleton { row: usize, col: usize },

    #[error("no elevation under segment endpoint ({lon}, {lat})")]
    MissingElevation { lon: f64, lat: f64 },

    #[error("stream order must be >= 1, got {0}")]
    InvalidOrder(i64),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("tile provider failed: {0}")]
    Provider(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            line,
            message: message.into(),
        }
    }

    /// Whether the failure was caused by the caller's inputs (missing files,
    /// malformed data, inconsistent arguments) rather than by this library.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Provider(_))
    }
}
