//! Seasonal fractional Poisson process: each calendar day `j = 1..=365` has
//! its own `(β(j), σ(j))`, estimated from all return times with Epanechnikov
//! weights in the circular day distance between `j` and the day each return
//! interval starts.

use core::f64::consts::PI;

#[allow(unused_imports)]
use crate::prelude::*;
use crate::dist::QuantileSet;
use crate::estimators::{estimate, Method, WeightedSample};
use crate::{Error, MlfParams, OptimizerConfig, Result};

mod metrics;
mod permutation;
mod simulate;

pub use metrics::{prob_within, return_time_quantile, weighted_freq_below};
pub use permutation::{
    half_series, permutation_test, split_distance, HalfFit, PermutationConfig, PermutationPlan, PermutationTestResult, YearEvents, LEVEL,
};
pub use simulate::{simulate_independent_years, simulate_seasonal_series, simulate_years};

/// Days on the calendar wheel.
pub const DAYS: u16 = 365;
/// Kernel half-width: distances `0..=45` carry weight.
pub const DEFAULT_BANDWIDTH: f64 = 46.0;
/// Hours per calendar day.
pub const HOURS_PER_DAY: f64 = 24.0;

/// `min(|h − j|, 365 − |h − j|)` for days in `1..=365`.
pub fn circular_distance(h: u16, j: u16) -> Result<u16> {
    check_day(h)?;
    check_day(j)?;
    let d = h.abs_diff(j);
    Ok(d.min(DAYS - d))
}

fn check_day(d: u16) -> Result<()> {
    if (1..=DAYS).contains(&d) {
        Ok(())
    } else {
        Err(Error::Domain("calendar day must lie in 1..=365"))
    }
}

/// Day on the 365-day wheel for a 1-based ordinal day of a year; in leap
/// years February 29 (ordinal 60) shares day 59 with February 28.
pub fn calendar_day(ordinal: u16, leap: bool) -> Result<u16> {
    let last = if leap { 366 } else { 365 };
    if !(1..=last).contains(&ordinal) {
        return Err(Error::Domain("ordinal day outside the year"));
    }
    Ok(if leap && ordinal >= 60 { ordinal - 1 } else { ordinal })
}

/// Gregorian leap-year rule.
pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

/// Epanechnikov kernel `(3/(4c))·max(0, 1 − (d/c)²)`; zero for `d ≥ c`.
pub fn epanechnikov(distance: f64, c: f64) -> f64 {
    if distance >= c {
        return 0.0;
    }
    let r = distance / c;
    0.75 / c * (1.0 - r * r)
}

/// Return times with the calendar day on which each interval starts.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReturnTimeSeries {
    return_times: Vec<f64>,
    start_days: Vec<u16>,
}

impl ReturnTimeSeries {
    pub fn new(return_times: Vec<f64>, start_days: Vec<u16>) -> Result<Self> {
        if return_times.len() != start_days.len() {
            return Err(Error::InvalidParams("return times and start days differ in length"));
        }
        if return_times.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParams("return times must be positive and finite"));
        }
        for &d in &start_days {
            check_day(d)?;
        }
        Ok(Self { return_times, start_days })
    }

    pub fn return_times(&self) -> &[f64] {
        &self.return_times
    }

    pub fn start_days(&self) -> &[u16] {
        &self.start_days
    }

    pub fn len(&self) -> usize {
        self.return_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.return_times.is_empty()
    }

    /// The same series with every start day moved `shift` days forward on
    /// the wheel.
    pub fn rotated(&self, shift: u16) -> Self {
        let start_days = self.start_days.iter().map(|&d| (d - 1 + shift % DAYS) % DAYS + 1).collect();
        Self { return_times: self.return_times.clone(), start_days }
    }
}

/// Normalized kernel weights of one calendar day.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    /// One entry per observation, summing to one.
    pub weights: Vec<f64>,
    /// Total unnormalized kernel mass.
    pub raw_mass: f64,
}

/// Weights `k̄_c(j, t_i)` of every observation for day `j`.
pub fn kernel_weights(j: u16, start_days: &[u16], c: f64) -> Result<KernelWeights> {
    check_day(j)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParams("bandwidth must be positive and finite"));
    }
    let mut raw = Vec::with_capacity(start_days.len());
    for &t in start_days {
        raw.push(epanechnikov(f64::from(circular_distance(t, j)?), c));
    }
    let raw_mass: f64 = raw.iter().sum();
    if raw_mass <= 0.0 {
        return Err(Error::EmptyWindow { day: j });
    }
    for w in &mut raw {
        *w /= raw_mass;
    }
    Ok(KernelWeights { weights: raw, raw_mass })
}

/// Kernel weight by circular distance `0..=182`.
fn weight_table(c: f64) -> [f64; 183] {
    let mut table = [0.0; 183];
    for (d, w) in table.iter_mut().enumerate() {
        *w = epanechnikov(d as f64, c);
    }
    table
}

/// Outcome of the estimator on one calendar day.
#[derive(Debug, Clone, PartialEq)]
pub enum DayStatus {
    Converged,
    /// The optimizer hit its iteration limit; the best iterate is kept.
    NotConverged,
    /// No observation within the kernel window.
    EmptyWindow,
    Failed(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayEstimate {
    /// Missing for empty windows and failed fits.
    pub params: Option<MlfParams>,
    pub status: DayStatus,
    /// Unnormalized kernel mass of the day.
    pub effective_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalFit {
    /// Index `j − 1` holds day `j`.
    pub days: Vec<DayEstimate>,
    pub bandwidth_days: f64,
    pub method: Method,
}

impl SeasonalFit {
    pub fn params(&self, day: u16) -> Option<MlfParams> {
        self.days.get(usize::from(day).wrapping_sub(1)).and_then(|d| d.params)
    }

    /// Days without an estimate.
    pub fn missing_days(&self) -> usize {
        self.days.iter().filter(|d| d.params.is_none()).count()
    }

    pub fn effective_n(&self) -> Vec<f64> {
        self.days.iter().map(|d| d.effective_n).collect()
    }
}

/// Fit every calendar day with the weighted form of `method`.
///
/// A day whose window is empty or whose fit fails is recorded as missing;
/// the other days are unaffected.
pub fn fit_seasonal(
    series: &ReturnTimeSeries,
    c: f64,
    method: Method,
    qs: Option<&QuantileSet>,
    cfg: &OptimizerConfig,
) -> Result<SeasonalFit> {
    if series.is_empty() {
        return Err(Error::InvalidParams("seasonal fit of an empty series"));
    }
    let days = (1..=DAYS).map(|j| fit_day(series, j, c, method, qs, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(SeasonalFit { days, bandwidth_days: c, method })
}

/// Estimate for calendar day `j` alone.
pub fn fit_day(
    series: &ReturnTimeSeries,
    j: u16,
    c: f64,
    method: Method,
    qs: Option<&QuantileSet>,
    cfg: &OptimizerConfig,
) -> Result<DayEstimate> {
    check_day(j)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParams("bandwidth must be positive and finite"));
    }
    let table = weight_table(c);
    // zero-weight observations are invisible to every estimator, so only the
    // window is passed on
    let mut values = Vec::new();
    let mut raw = Vec::new();
    for (&w, &t) in series.return_times.iter().zip(&series.start_days) {
        let k = table[usize::from(circular_distance(t, j)?)];
        if k > 0.0 {
            values.push(w);
            raw.push(k);
        }
    }
    let raw_mass: f64 = raw.iter().sum();
    if raw_mass <= 0.0 {
        return Ok(DayEstimate { params: None, status: DayStatus::EmptyWindow, effective_n: 0.0 });
    }
    for k in &mut raw {
        *k /= raw_mass;
    }
    let sample = WeightedSample::with_weights(values, raw)?;
    Ok(match estimate(method, &sample, qs, cfg) {
        Ok(r) => DayEstimate {
            params: Some(r.params),
            status: if r.converged { DayStatus::Converged } else { DayStatus::NotConverged },
            effective_n: raw_mass,
        },
        Err(e) => DayEstimate { params: None, status: DayStatus::Failed(e), effective_n: raw_mass },
    })
}

/// `a + b·cos(2πt/365)` style annual curve helper used by the simulations.
pub fn annual_harmonic(day: u16, mean: f64, cos_amp: f64, sin_amp: f64) -> f64 {
    let phase = 2.0 * PI * f64::from(day) / f64::from(DAYS);
    mean + cos_amp * phase.cos() + sin_amp * phase.sin()
}
