use thiserror::Error;

/// Errors raised by tensor and tape operations.
#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch: {op} got {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("invalid shape {shape:?}: product does not match data length {len}")]
    InvalidShape { shape: Vec<usize>, len: usize },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("axis {axis} out of range for shape {shape:?}")]
    AxisOutOfRange { axis: usize, shape: Vec<usize> },
    #[error("slice [{start}, {start}+{len}) out of range on axis {axis} of {shape:?}")]
    SliceOutOfRange {
        axis: usize,
        start: usize,
        len: usize,
        shape: Vec<usize>,
    },
    #[error("concat requires at least one input")]
    EmptyConcat,
    #[error("embedding index {index} out of range for table with {rows} rows")]
    EmbedIndexOutOfRange { index: usize, rows: usize },
    #[error("dropout rate {0} outside [0, 1)")]
    InvalidDropoutRate(f64),
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(String),
}
