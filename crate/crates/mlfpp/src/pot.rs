//! Peaks-over-threshold extraction from regularly sampled series.
//!
//! The threshold is the `⌈level·n⌉`-th order statistic of the series
//! (1-based); by default an observation is an event when it lies strictly
//! above it, so at most `⌊(1 − level)·n⌋` events are declared. No
//! declustering is applied: exceedances at consecutive steps produce return
//! times of one cadence.

use std::ops::RangeInclusive;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Utc};
use mlfpp_core::seasonal::{calendar_day, ReturnTimeSeries, YearEvents};

use crate::error::{Error, Result};

/// Allowed mismatch between a time step and the cadence, in hours.
pub const CADENCE_TOL_HOURS: f64 = 1e-6;

pub(crate) fn hours_between(a: DateTime<Utc>, b: DateTime<Utc>) -> f64 {
    (b - a).num_milliseconds() as f64 / 3_600_000.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    timestamps: Vec<DateTime<Utc>>,
    values: Vec<f64>,
    cadence_hours: f64,
}

impl ObservationSeries {
    pub fn new(timestamps: Vec<DateTime<Utc>>, values: Vec<f64>, cadence_hours: f64) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::Config("timestamps and values differ in length".into()));
        }
        if !(cadence_hours > 0.0 && cadence_hours.is_finite()) {
            return Err(Error::Config("cadence must be positive".into()));
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("timestamps must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("values must be finite".into()));
        }
        Ok(Self { timestamps, values, cadence_hours })
    }

    /// Like [`ObservationSeries::new`] with the cadence taken as the median
    /// time step (one hour for a single observation).
    pub fn with_inferred_cadence(timestamps: Vec<DateTime<Utc>>, values: Vec<f64>) -> Result<Self> {
        let mut steps: Vec<f64> = timestamps.windows(2).map(|w| hours_between(w[0], w[1])).collect();
        steps.sort_by(f64::total_cmp);
        let cadence = steps.get(steps.len() / 2).copied().unwrap_or(1.0);
        Self::new(timestamps, values, cadence)
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cadence_hours(&self) -> f64 {
        self.cadence_hours
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices `i` whose step from observation `i − 1` is not one cadence.
    pub fn gaps(&self) -> Vec<usize> {
        (1..self.timestamps.len())
            .filter(|&i| {
                let step = hours_between(self.timestamps[i - 1], self.timestamps[i]);
                (step - self.cadence_hours).abs() > CADENCE_TOL_HOURS
            })
            .collect()
    }

    /// Calendar years touched by the series.
    pub fn years(&self) -> Option<RangeInclusive<i32>> {
        Some(self.timestamps.first()?.year()..=self.timestamps.last()?.year())
    }
}

/// Whether an observation equal to the threshold counts as an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExceedanceRule {
    /// `value > threshold`.
    #[default]
    Strict,
    /// `value ≥ threshold`.
    Weak,
}

impl ExceedanceRule {
    fn admits(self, value: f64, threshold: f64) -> bool {
        match self {
            ExceedanceRule::Strict => value > threshold,
            ExceedanceRule::Weak => value >= threshold,
        }
    }
}

impl FromStr for ExceedanceRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(ExceedanceRule::Strict),
            "weak" => Ok(ExceedanceRule::Weak),
            _ => Err(Error::Config(format!("unknown exceedance rule {s:?} (expected strict or weak)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceRecord {
    pub event_times: Vec<DateTime<Utc>>,
    pub event_values: Vec<f64>,
    pub threshold: f64,
    pub quantile_level: f64,
}

impl ExceedanceRecord {
    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }
}

/// The `⌈level·n⌉`-th order statistic of `values`.
pub fn threshold(values: &[f64], level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Threshold("level must lie in (0, 1)"));
    }
    if values.is_empty() {
        return Err(Error::Threshold("empty series"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::Threshold("constant series has no upper tail"));
    }
    let rank = ((level * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

pub fn extract_exceedances(s: &ObservationSeries, level: f64, rule: ExceedanceRule) -> Result<ExceedanceRecord> {
    let threshold = threshold(&s.values, level)?;
    let (event_times, event_values) = s
        .timestamps
        .iter()
        .zip(&s.values)
        .filter(|&(_, &v)| rule.admits(v, threshold))
        .map(|(&t, &v)| (t, v))
        .unzip();
    Ok(ExceedanceRecord { event_times, event_values, threshold, quantile_level: level })
}

/// Day on the 365-day wheel (February 29 shares day 59 with February 28).
pub fn day_of_year(t: DateTime<Utc>) -> u16 {
    let leap = NaiveDate::from_ymd_opt(t.year(), 12, 31).is_some_and(|d| d.ordinal() == 366);
    calendar_day(t.ordinal() as u16, leap).expect("chrono ordinals are valid")
}

/// Return times in hours, each tagged with the calendar day of the event
/// opening it.
pub fn to_return_times(e: &ExceedanceRecord) -> Result<ReturnTimeSeries> {
    if e.event_times.len() < 2 {
        return Err(Error::TooFewEvents { found: e.event_times.len(), needed: 2 });
    }
    let (return_times, start_days) = e
        .event_times
        .windows(2)
        .map(|w| (hours_between(w[0], w[1]), day_of_year(w[0])))
        .unzip();
    Ok(ReturnTimeSeries::new(return_times, start_days)?)
}

/// Events grouped by calendar year over `years`; years without events are
/// kept (empty).
pub fn year_events(e: &ExceedanceRecord, years: RangeInclusive<i32>) -> Result<Vec<YearEvents>> {
    let mut out = Vec::new();
    for year in years {
        let start = Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).single().ok_or(Error::Config(format!("year {year} out of range")))?;
        let hours = e
            .event_times
            .iter()
            .filter(|t| t.year() == year)
            .map(|&t| hours_between(start, t))
            .collect();
        out.push(YearEvents::new(year, hours)?);
    }
    Ok(out)
}
