use alloc::string::String;
use core::fmt;

/// Errors surfaced by operators, solvers and generators.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Matrix construction from ragged or empty row data.
    RaggedInput,
    /// Partial Walsh-Hadamard operators need a power-of-two dimension.
    NotPowerOfTwo { n: usize },
    /// Requested more measurements than the signal dimension allows.
    BadMeasurementCount { m: usize, n: usize },
    /// Operand shapes do not conform for the requested product.
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// Vector length does not match the expected dimension.
    LengthMismatch { expected: usize, got: usize },
    /// Weight vectors must be componentwise 0 or 1.
    NonBinaryWeight { index: usize },
    /// Shrinkage thresholds must be nonnegative and finite.
    BadThreshold { index: usize },
    /// Invalid solver or experiment configuration.
    BadConfig(String),
    /// Data matrix is identically zero; the minimizer is X = 0 and the
    /// data-driven penalty formula is undefined.
    ZeroData,
    /// Non-finite values encountered while iterating.
    Diverged { iter: usize },
    /// Divergence inside a multi-stage run, annotated with the stage.
    StageDiverged { stage: usize, iter: usize },
    /// Sparsity target exceeds what the instance supports.
    BadSparsity { k: usize, limit: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::RaggedInput => write!(f, "rows are empty or have unequal lengths"),
            Error::NotPowerOfTwo { n } => write!(f, "dimension {n} is not a power of two"),
            Error::BadMeasurementCount { m, n } => {
                write!(f, "measurement count {m} out of range for dimension {n}")
            }
            Error::ShapeMismatch { expected, got } => write!(
                f,
                "shape mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            Error::NonBinaryWeight { index } => {
                write!(f, "weight at index {index} is not 0 or 1")
            }
            Error::BadThreshold { index } => {
                write!(f, "threshold at index {index} is negative or non-finite")
            }
            Error::BadConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::ZeroData => write!(f, "data matrix is identically zero; the solution is X = 0"),
            Error::Diverged { iter } => {
                write!(f, "solver diverged: non-finite iterate at iteration {iter}")
            }
            Error::StageDiverged { stage, iter } => {
                write!(f, "solver diverged at stage {stage}, iteration {iter}")
            }
            Error::BadSparsity { k, limit } => {
                write!(f, "sparsity {k} exceeds limit {limit}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
