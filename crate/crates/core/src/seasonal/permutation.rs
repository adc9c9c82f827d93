//! Seasonal-stability permutation test.
//!
//! Years are split into two halves, each half is fitted day by day, and the
//! halves are compared by `Σ_j (β̂_1(j) − β̂_2(j))²` (and the same for `σ`).
//! Random reassignments of whole years to the halves give the reference
//! distribution.
//!
//! Within a half, years are joined in chronological order and return times
//! are recomputed across the joins. Because a half is then determined by its
//! set of years alone, each distinct half is fitted once and reused by every
//! permutation that produces it.

use alloc::collections::{BTreeMap, BTreeSet};

use super::{calendar_day, fit_seasonal, is_leap_year, ReturnTimeSeries, DAYS, DEFAULT_BANDWIDTH, HOURS_PER_DAY};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::dist::QuantileSet;
use crate::error::PermutationFailure;
use crate::estimators::Method;
use crate::rng::{derive_seed, Stream};
use crate::{Error, MlfParams, OptimizerConfig, Result};

/// Sub-stream key of the year shuffles.
const SHUFFLE_STREAM: u64 = 0x5045_524d; // "PERM"

/// Rejection level of the test.
pub const LEVEL: f64 = 0.05;

/// Event times of one calendar year, in hours since January 1, 00:00.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct YearEvents {
    year: i32,
    hours: Vec<f64>,
}

impl YearEvents {
    /// `hours` must be strictly increasing and inside the year.
    pub fn new(year: i32, hours: Vec<f64>) -> Result<Self> {
        let length = year_hours(year);
        if hours.iter().any(|&h| !(h >= 0.0 && h < length)) {
            return Err(Error::InvalidParams("event time outside its year"));
        }
        if hours.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("event times must be strictly increasing"));
        }
        Ok(Self { year, hours })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn hours(&self) -> &[f64] {
        &self.hours
    }

    pub fn length_hours(&self) -> f64 {
        year_hours(self.year)
    }

    /// Calendar day (on the 365-day wheel) of the event at `hour`.
    fn day_of(&self, hour: f64) -> u16 {
        let ordinal = (hour / HOURS_PER_DAY) as u16 + 1;
        calendar_day(ordinal, is_leap_year(self.year)).expect("hour checked on construction")
    }
}

fn year_hours(year: i32) -> f64 {
    if is_leap_year(year) {
        366.0 * HOURS_PER_DAY
    } else {
        365.0 * HOURS_PER_DAY
    }
}

/// Return times of the given years (indices into `years`) joined in the
/// order given; each interval carries the calendar day of its first event.
pub fn half_series(years: &[YearEvents], members: &[usize]) -> Result<ReturnTimeSeries> {
    let mut offset = 0.0;
    let mut prev: Option<(f64, u16)> = None;
    let mut return_times = Vec::new();
    let mut start_days = Vec::new();
    for &m in members {
        let y = years.get(m).ok_or(Error::InvalidParams("year index out of range"))?;
        for &h in &y.hours {
            let t = offset + h;
            if let Some((t0, d0)) = prev {
                return_times.push(t - t0);
                start_days.push(d0);
            }
            prev = Some((t, y.day_of(h)));
        }
        offset += y.length_hours();
    }
    ReturnTimeSeries::new(return_times, start_days)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationConfig {
    /// Kernel bandwidth `c` in days.
    pub bandwidth: f64,
    pub method: Method,
    /// Defaults per method when absent.
    pub quantiles: Option<QuantileSet>,
    /// Number of random reassignments `B`.
    pub permutations: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Years in the first chronological half; half of the years (rounded
    /// down) when absent.
    pub first_half_years: Option<usize>,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self {
            bandwidth: DEFAULT_BANDWIDTH,
            method: Method::Qb,
            quantiles: None,
            permutations: 1000,
            seed: 0,
            optimizer: OptimizerConfig::default(),
            first_half_years: None,
        }
    }
}

/// Daily estimates of one half; `None` marks a missing day.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfFit {
    pub params: Vec<Option<MlfParams>>,
}

impl HalfFit {
    pub fn missing_days(&self) -> usize {
        self.params.iter().filter(|p| p.is_none()).count()
    }
}

/// Squared distances `(Σ Δβ², Σ Δσ²)` over the days estimated in both halves.
pub fn split_distance(a: &HalfFit, b: &HalfFit) -> (f64, f64) {
    let (mut d_beta, mut d_sigma) = (0.0, 0.0);
    for (pa, pb) in a.params.iter().zip(&b.params) {
        if let (Some(pa), Some(pb)) = (pa, pb) {
            d_beta += (pa.beta - pb.beta) * (pa.beta - pb.beta);
            d_sigma += (pa.sigma - pb.sigma) * (pa.sigma - pb.sigma);
        }
    }
    (d_beta, d_sigma)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PermutationTestResult {
    pub observed_distance_beta: f64,
    pub observed_distance_sigma: f64,
    pub permutation_distances_beta: Vec<f64>,
    pub permutation_distances_sigma: Vec<f64>,
    /// `(1 + #{permuted ≥ observed}) / (B + 1)`.
    pub p_value_beta: f64,
    pub p_value_sigma: f64,
    pub reject_beta: bool,
    pub reject_sigma: bool,
}

/// The observed split and the `B` random splits of one test, as sorted year
/// index sets.
///
/// The plan separates the (expensive, independent) half fits from the
/// bookkeeping so callers can fit [`PermutationPlan::halves`] in any order
/// or in parallel and still obtain the same result.
#[derive(Debug, Clone)]
pub struct PermutationPlan {
    years: Vec<YearEvents>,
    cfg: PermutationConfig,
    observed: (Vec<usize>, Vec<usize>),
    permuted: Vec<(Vec<usize>, Vec<usize>)>,
}

impl PermutationPlan {
    /// Years are ordered chronologically; at least four distinct years and
    /// `B ≥ 1` are required.
    pub fn new(mut years: Vec<YearEvents>, cfg: PermutationConfig) -> Result<Self> {
        if years.len() < 4 {
            return Err(Error::InvalidParams("the permutation test needs at least four years"));
        }
        if cfg.permutations == 0 {
            return Err(Error::InvalidParams("the permutation test needs at least one permutation"));
        }
        if !(cfg.bandwidth > 0.0 && cfg.bandwidth.is_finite()) {
            return Err(Error::InvalidParams("bandwidth must be positive and finite"));
        }
        cfg.optimizer.validate()?;
        years.sort_by_key(|y| y.year);
        if years.windows(2).any(|w| w[0].year == w[1].year) {
            return Err(Error::InvalidParams("each year may appear only once"));
        }
        let n = years.len();
        let k = cfg.first_half_years.unwrap_or(n / 2);
        if k == 0 || k >= n {
            return Err(Error::InvalidParams("both halves need at least one year"));
        }
        let observed = ((0..k).collect(), (k..n).collect());
        let mut rng = Stream::new(derive_seed(cfg.seed, SHUFFLE_STREAM, 0));
        let mut order: Vec<usize> = (0..n).collect();
        let permuted = (0..cfg.permutations)
            .map(|_| {
                order.sort_unstable();
                rng.shuffle(&mut order);
                let mut first = order[..k].to_vec();
                let mut second = order[k..].to_vec();
                first.sort_unstable();
                second.sort_unstable();
                (first, second)
            })
            .collect();
        Ok(Self { years, cfg, observed, permuted })
    }

    pub fn years(&self) -> &[YearEvents] {
        &self.years
    }

    pub fn config(&self) -> &PermutationConfig {
        &self.cfg
    }

    /// Every distinct half the test needs, in ascending order.
    pub fn halves(&self) -> Vec<Vec<usize>> {
        let mut set = BTreeSet::new();
        set.insert(self.observed.0.clone());
        set.insert(self.observed.1.clone());
        for (a, b) in &self.permuted {
            set.insert(a.clone());
            set.insert(b.clone());
        }
        set.into_iter().collect()
    }

    /// Seasonal fit of one half; fails when more than half of the days
    /// have no estimate.
    pub fn fit_half(&self, members: &[usize]) -> Result<HalfFit> {
        let too_many = |failed_days| {
            Error::Permutation(PermutationFailure { failed_days, detail: "a half has no estimate on more than half of the days" })
        };
        let series = half_series(&self.years, members)?;
        if series.is_empty() {
            return Err(too_many(usize::from(DAYS)));
        }
        let fit = fit_seasonal(&series, self.cfg.bandwidth, self.cfg.method, self.cfg.quantiles.as_ref(), &self.cfg.optimizer)?;
        let half = HalfFit { params: fit.days.iter().map(|d| d.params).collect() };
        let missing = half.missing_days();
        if 2 * missing > usize::from(DAYS) {
            return Err(too_many(missing));
        }
        Ok(half)
    }

    /// Assemble the result from fits of every half in [`Self::halves`].
    pub fn finish(&self, fits: &BTreeMap<Vec<usize>, HalfFit>) -> Result<PermutationTestResult> {
        let get = |members: &Vec<usize>| fits.get(members).ok_or(Error::InvalidParams("a required half was not fitted"));
        let (obs_beta, obs_sigma) = split_distance(get(&self.observed.0)?, get(&self.observed.1)?);
        let mut perm_beta = Vec::with_capacity(self.permuted.len());
        let mut perm_sigma = Vec::with_capacity(self.permuted.len());
        for (a, b) in &self.permuted {
            let (db, ds) = split_distance(get(a)?, get(b)?);
            perm_beta.push(db);
            perm_sigma.push(ds);
        }
        let p_value = |obs: f64, perm: &[f64]| {
            let exceed = perm.iter().filter(|&&d| d >= obs).count();
            (1 + exceed) as f64 / (perm.len() + 1) as f64
        };
        let p_value_beta = p_value(obs_beta, &perm_beta);
        let p_value_sigma = p_value(obs_sigma, &perm_sigma);
        Ok(PermutationTestResult {
            observed_distance_beta: obs_beta,
            observed_distance_sigma: obs_sigma,
            permutation_distances_beta: perm_beta,
            permutation_distances_sigma: perm_sigma,
            p_value_beta,
            p_value_sigma,
            reject_beta: p_value_beta <= LEVEL,
            reject_sigma: p_value_sigma <= LEVEL,
        })
    }
}

/// Run the test sequentially; see [`PermutationPlan`] for the parallel form.
pub fn permutation_test(years: Vec<YearEvents>, cfg: PermutationConfig) -> Result<PermutationTestResult> {
    let plan = PermutationPlan::new(years, cfg)?;
    let mut fits = BTreeMap::new();
    for members in plan.halves() {
        let fit = plan.fit_half(&members)?;
        fits.insert(members, fit);
    }
    plan.finish(&fits)
}
