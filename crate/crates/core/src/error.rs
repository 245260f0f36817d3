use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every numerical routine in the crate.
///
/// `Refused` is the first-class "hypothesis does not hold" outcome; it is not
/// a bug. `InvariantViolation` means a relation that must hold under the
/// checked hypotheses failed numerically.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    EntryCount {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("SVD did not converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },

    #[error("matrix is singular to tolerance: smallest singular value {sigma_min:e} <= cutoff {cutoff:e}")]
    Singular { sigma_min: f64, cutoff: f64 },

    #[error("basis columns are not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("refused: {condition} (measured {value:e})")]
    Refused { condition: String, value: f64 },

    #[error("invariant violated: {name}: {value:e} exceeds {limit:e}")]
    InvariantViolation {
        name: String,
        value: f64,
        limit: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn refused(condition: impl Into<String>, value: f64) -> Self {
        Error::Refused {
            condition: condition.into(),
            value,
        }
    }

    pub(crate) fn invariant(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Error::InvariantViolation {
            name: name.into(),
            value,
            limit,
        }
    }

    /// True for outcomes that signal a failed hypothesis or certificate rather
    /// than bad input.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::Refused { .. } | Error::InvariantViolation { .. } | Error::Singular { .. }
        )
    }
}
