//! Special functions: the one- and two-parameter Mittag-Leffler functions on
//! the non-positive real axis, gamma-family helpers and compensated sums.
//!
//! `E_β(−τ)` is evaluated in one of three regimes:
//!
//! - power series for `τ ≤ series_cutoff`,
//! - the large-argument expansion `Σ_{k≥1} (−1)^{k+1} τ^{−k} / Γ(ρ − βk)` once
//!   its optimally truncated remainder is below the tolerance,
//! - otherwise numerical inversion of the Laplace transform
//!   `s^{β−ρ} / (s^β + τ)` along a parabolic contour.
//!
//! `β = 1` is evaluated through the exponential directly.

use core::fmt;

mod gamma;
mod mittag_leffler;
mod sum;

pub use gamma::{
    digamma, gamma, ln_gamma, reciprocal_gamma, reciprocal_gamma_derivative, sin_pi,
    EULER_GAMMA, PI_SQUARED_OVER_SIX,
};
pub use mittag_leffler::{
    mittag_leffler, mittag_leffler_two_param, mittag_leffler_two_param_with,
    mittag_leffler_with, MittagLeffler,
};
pub use sum::{compensated_sum, CompensatedSum};


use crate::{Error, Result};

/// Evaluation regime of a Mittag-Leffler function value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regime {
    /// `β = 1`, evaluated as an exponential.
    Exact,
    Series,
    Asymptotic,
    Contour,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Exact => "exact",
            Regime::Series => "series",
            Regime::Asymptotic => "asymptotic",
            Regime::Contour => "contour",
        })
    }
}

/// Accuracy policy for Mittag-Leffler evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlfEvalConfig {
    /// Largest `|x|` summed by the power series.
    pub series_cutoff: f64,
    /// Requested relative accuracy, in `(0, 1e-4]`.
    pub target_rel_tol: f64,
    /// Term budget for series and expansions, at least 50.
    pub max_terms: usize,
}

impl Default for MlfEvalConfig {
    fn default() -> Self {
        Self { series_cutoff: 1.0, target_rel_tol: 1e-10, max_terms: 2000 }
    }
}

impl MlfEvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.series_cutoff > 0.0 && self.series_cutoff.is_finite()) {
            return Err(Error::InvalidParams("series_cutoff must be positive and finite"));
        }
        if !(self.target_rel_tol > 0.0 && self.target_rel_tol <= 1e-4) {
            return Err(Error::InvalidParams("target_rel_tol must lie in (0, 1e-4]"));
        }
        if self.max_terms < 50 {
            return Err(Error::InvalidParams("max_terms must be at least 50"));
        }
        Ok(())
    }
}
