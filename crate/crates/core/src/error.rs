use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("input contains no data rows")]
    Empty,

    #[error("row {row} has {found} fields, expected {expected}")]
    MixedArity { row: usize, expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    /// The data cannot support the requested computation (all points identical,
    /// no feasible k, ...).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("k = {k} requires at least {k} distinct points, found {distinct}")]
    TooFewDistinct { k: usize, distinct: usize },

    #[error("could not place {k} centers at separation {separation} after {attempts} attempts")]
    Placement { k: usize, separation: f64, attempts: usize },

    #[error("center set mismatch: {0}")]
    CenterMismatch(String),

    #[error("cost matrix contains NaN at ({row}, {column})")]
    NanCost { row: usize, column: usize },
}

impl Error {
    /// True for failures caused by the data rather than by usage or I/O.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate(_) | Error::TooFewDistinct { .. })
    }
}
