use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid distribution: {0}")]
    InvalidDist(String),

    #[error("cell {cell:?} lies outside the grid box")]
    OutsideBox { cell: Vec<i64> },

    #[error("event has zero probability")]
    ZeroProbability,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate quadratic form (discriminant is zero)")]
    DegenerateForm,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("scale range mismatch: {0}")]
    ScaleRange(String),

    #[error("empty admissible parameter range: {0}")]
    EmptyRange(String),

    #[error("arithmetic overflow in exact evaluation")]
    Overflow,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = core::result::Result<T, Error>;
