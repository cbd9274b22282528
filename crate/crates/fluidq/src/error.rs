use std::fmt;

/// Errors produced by model validation, elimination, and the solvers.
#[derive(Debug, Clone)]
pub enum Error {
    /// The model file could not be parsed.
    Parse { line: usize, message: String },
    /// The model violates a structural requirement (signs, rates, irreducibility).
    InvalidModel(String),
    /// Doubling parameters outside their admissible range.
    InvalidParameters(String),
    /// A triplet representation fails its sign constraints.
    InvalidTriplet(String),
    /// Elimination produced a negative pivot; the certificate does not
    /// describe an M-matrix and the caller must not proceed.
    NegativePivot { index: usize, value: f64 },
    /// A pivot vanished before the final elimination step, which signals a
    /// reducible or prematurely singular leading block.
    PrematureZeroPivot { index: usize },
    /// A factorization or solve hit an exactly singular matrix.
    Singular(String),
    /// Operation requires a negative mean drift.
    NotPositiveRecurrent { drift: f64 },
    /// The doubling iteration did not meet its tolerance.
    MaxIterationsExceeded { iterations: usize, last_ratio: f64 },
    /// A non-finite value appeared mid-computation.
    NonFinite(String),
    /// Scaling could not bring the exponential argument into range.
    Overflow(String),
    /// Matrix or vector dimensions do not match.
    ShapeMismatch(String),
    /// The extended-precision reference computation failed.
    Oracle(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, message } => write!(f, "parse error at line {}: {}", line, message),
            Error::InvalidModel(msg) => write!(f, "invalid model: {}", msg),
            Error::InvalidParameters(msg) => write!(f, "invalid parameters: {}", msg),
            Error::InvalidTriplet(msg) => write!(f, "invalid triplet representation: {}", msg),
            Error::NegativePivot { index, value } => write!(
                f,
                "negative pivot {:e} at elimination step {}: triplet does not certify an M-matrix",
                value, index
            ),
            Error::PrematureZeroPivot { index } => write!(
                f,
                "zero pivot at elimination step {} before the final one: reducible or singular leading block",
                index
            ),
            Error::Singular(msg) => write!(f, "singular matrix: {}", msg),
            Error::NotPositiveRecurrent { drift } => {
                write!(f, "model is not positive recurrent (mean drift {:e} >= 0)", drift)
            }
            Error::MaxIterationsExceeded { iterations, last_ratio } => write!(
                f,
                "doubling did not converge after {} iterations (last increment ratio {:e})",
                iterations, last_ratio
            ),
            Error::NonFinite(msg) => write!(f, "non-finite value: {}", msg),
            Error::Overflow(msg) => write!(f, "overflow: {}", msg),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {}", msg),
            Error::Oracle(msg) => write!(f, "reference solve failed: {}", msg),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
