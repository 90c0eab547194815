use thiserror::Error;

/// Errors produced by tensor operations, solvers and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible shapes or dimensions.
    #[error("shape error: {0}")]
    Shape(String),

    /// A value outside the domain of a function (e.g. a nonpositive base
    /// raised to a negative power).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration or argument values.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The objective became NaN or infinite during a fit.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A malformed binary tensor file.
    #[error("format error: {0}")]
    Format(String),

    /// A malformed line in a text input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! shape_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Shape(format!($($arg)*))
    };
}

pub(crate) use shape_err;
