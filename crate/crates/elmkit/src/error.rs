//! Error type shared by every module in the crate.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, {}x{} vs {}x{}", left.0, left.1, right.0, right.1)]
    DimMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op}: matrix must be nonempty")]
    EmptyMatrix { op: &'static str },

    #[error("{op}: non-finite value at ({row}, {col})")]
    NonFinite {
        op: &'static str,
        row: usize,
        col: usize,
    },

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("linear solve failed: {op}")]
    SolveFailed { op: &'static str },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("class {class} has {count} samples, too few for a {fraction} split")]
    ClassTooSmall {
        class: usize,
        count: usize,
        fraction: f64,
    },

    #[error("hidden size {hidden} is smaller than the class count {classes}")]
    HiddenTooSmall { hidden: usize, classes: usize },

    #[error("equal allocation needs {classes} classes to divide hidden size {hidden}")]
    UnevenBlocks { hidden: usize, classes: usize },

    #[error("{}: {reason}", path.display())]
    FileFormat { path: PathBuf, reason: String },

    #[error("{}:{line}: {reason}", path.display())]
    CsvRow {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
