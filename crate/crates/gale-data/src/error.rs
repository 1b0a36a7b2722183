use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("row {row}: cannot parse timestamp `{value}`")]
    UnparsableTimestamp { row: usize, value: String },
    #[error("no data rows in `{0}`")]
    EmptyFile(String),
    #[error("column `{0}` has fewer than two observed values")]
    AllMissingColumn(String),
    #[error("target resolution {target_seconds}s is not an integer multiple of {frame_seconds}s")]
    NonIntegerRatio {
        frame_seconds: i64,
        target_seconds: i64,
    },
    #[error("year lists overlap: {0} appears in two splits")]
    OverlappingYears(i32),
    #[error("{0} split contains no rows")]
    EmptySplit(String),
    #[error("no normalization parameters for column `{0}`")]
    UnknownColumn(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("series length mismatch: column `{name}` has {len}, expected {expected}")]
    LengthMismatch {
        name: String,
        len: usize,
        expected: usize,
    },
    #[error("timestamps must be strictly increasing (violated at index {0})")]
    NonMonotoneTimestamps(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("format error: {0}")]
    Format(String),
}
