use core::fmt;

use crate::special::Regime;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(&'static str),

    /// A series or iteration did not reach the requested accuracy.
    #[error("evaluation did not converge in the {regime} regime (partial estimate {partial})")]
    Evaluation { regime: Regime, partial: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),

    #[error("estimation failed: {0}")]
    Estimation(&'static str),

    /// Weighted estimation needs `sum(w^2) < 1`.
    #[error("weighting error: sum of squared weights {0} is not below 1")]
    Weighting(f64),

    /// No observation falls inside the kernel window of a calendar day.
    #[error("no observation within the kernel window of day {day}")]
    EmptyWindow { day: u16 },

    #[error("optimizer error: {0}")]
    Optimizer(&'static str),

    #[error("permutation test failed: {0}")]
    Permutation(PermutationFailure),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationFailure {
    pub failed_days: usize,
    pub detail: &'static str,
}

impl fmt::Display for PermutationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} days without estimate)", self.detail, self.failed_days)
    }
}
