use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cannot construct Gauss-Hermite rule of order {order}: {reason}")]
    RuleConstruction { order: usize, reason: &'static str },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error(
        "{context}: matrix is not positive definite (jitter {jitter:e}, smallest pivot {pivot:e} at row {row})"
    )]
    NotPositiveDefinite {
        context: &'static str,
        jitter: f64,
        pivot: f64,
        row: usize,
    },

    #[error("{what}: {reason}")]
    Domain { what: &'static str, reason: String },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: &'static str },

    #[error("model evaluation outside admissible region: {reason}")]
    Inadmissible { reason: &'static str },

    #[error("hyperparameter fit failed; objective trace of all starts: {trace:?}")]
    FitFailed { trace: Vec<f64> },

    #[error("optimizer hit a non-finite risk at iteration {iteration} (last finite risk {last_risk})")]
    Optimizer { iteration: usize, last_risk: f64 },
}

impl Error {
    pub(crate) fn domain(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            what,
            reason: reason.into(),
        }
    }

    /// True for failures that stem from floating-point breakdown rather than
    /// invalid input (used by the CLI to choose its exit code).
    pub fn is_numeric(&self) -> bool {
        !matches!(self, Error::Domain { .. } | Error::Dimension { .. })
    }
}
