use thiserror::Error;

/// Errors produced anywhere in the engine.
///
/// Variants are grouped so front ends can map them onto exit statuses:
/// malformed input, violated mathematical preconditions, and solver failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("weights must be nonnegative and sum to 1 (sum = {sum})")]
    WeightSimplex { sum: f64 },

    #[error("profile is not normalizable: {0}")]
    NonNormalizable(String),

    #[error("profile has an infinite second moment: {0}")]
    DivergentMoment(String),

    #[error("domain too small: {leakage:.3e} of the mass lies outside (tolerance {tolerance:.1e})")]
    DomainTooSmall { leakage: f64, tolerance: f64 },

    #[error("kernel underflow at epsilon = {epsilon:.3e}; use a larger epsilon or anneal from a larger value")]
    KernelUnderflow { epsilon: f64 },

    #[error("problem size {n}x{m} exceeds the exact-solver cap of {cap} couplings; subsample the clouds")]
    SizeCap { n: usize, m: usize, cap: usize },

    #[error("degenerate point set: {0}")]
    DegenerateFit(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a mathematical precondition (as opposed to malformed input).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::NonNormalizable(_)
                | Error::DivergentMoment(_)
                | Error::DomainTooSmall { .. }
                | Error::KernelUnderflow { .. }
                | Error::DegenerateFit(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
