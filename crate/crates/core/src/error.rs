use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad parameters or an input that violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),
    /// Mismatched or unsupported dimensions.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// Input is rank-deficient where full rank is required.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A computation would exceed its enumeration or iteration budget.
    #[error("resource error: {0}")]
    Resource(String),
    /// An adopted proof constant was falsified by an input.
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Dimension(_)
            | Error::Degenerate(_)
            | Error::Calibration(_) => 2,
            Error::Resource(_) => 3,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        // Bound first so that NaN comparisons fail the check.
        let holds: bool = $cond;
        if !holds {
            return Err($crate::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
