//! Daily seasonal analysis on the rayon pool and its CSV table.

use std::collections::BTreeMap;
use std::path::Path;

use mlfpp_core::seasonal::{
    fit_day, prob_within, return_time_quantile, weighted_freq_below, DayStatus, PermutationConfig, PermutationPlan,
    PermutationTestResult, ReturnTimeSeries, SeasonalFit, YearEvents, DAYS,
};
use mlfpp_core::{Method, OptimizerConfig, QuantileSet};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::io::{fmt_float, CsvOut};

pub const DEFAULT_LEVEL: f64 = 0.99;
pub const DEFAULT_HORIZON_HOURS: f64 = 72.0;
pub const DEFAULT_ALPHA: f64 = 0.75;

/// `fit_seasonal` with the days fitted in parallel.
pub fn fit_seasonal_par(series: &ReturnTimeSeries, c: f64, method: Method, qs: Option<&QuantileSet>, cfg: &OptimizerConfig) -> Result<SeasonalFit> {
    if series.is_empty() {
        return Err(mlfpp_core::Error::InvalidParams("seasonal fit of an empty series").into());
    }
    let days = (1..=DAYS)
        .into_par_iter()
        .map(|j| fit_day(series, j, c, method, qs, cfg))
        .collect::<mlfpp_core::Result<Vec<_>>>()?;
    Ok(SeasonalFit { days, bandwidth_days: c, method })
}

/// `permutation_test` with the distinct halves fitted in parallel.
pub fn permutation_test_par(years: Vec<YearEvents>, cfg: PermutationConfig) -> Result<PermutationTestResult> {
    let plan = PermutationPlan::new(years, cfg)?;
    let fits = plan
        .halves()
        .into_par_iter()
        .map(|h| plan.fit_half(&h).map(|f| (h, f)))
        .collect::<mlfpp_core::Result<BTreeMap<_, _>>>()?;
    Ok(plan.finish(&fits)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayRow {
    pub day: u16,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    /// Return-time quantile at the configured level.
    pub quantile_hours: Option<f64>,
    /// Probability of another event within the horizon.
    pub p_within: Option<f64>,
    /// Kernel-weighted share of observed return times below the horizon.
    pub h_below: Option<f64>,
    pub effective_n: f64,
    pub status: &'static str,
}

fn status_name(s: &DayStatus) -> &'static str {
    match s {
        DayStatus::Converged => "converged",
        DayStatus::NotConverged => "not_converged",
        DayStatus::EmptyWindow => "empty_window",
        DayStatus::Failed(_) => "failed",
    }
}

/// One row per calendar day; derived columns are missing where the day
/// has no estimate.
pub fn daily_table(series: &ReturnTimeSeries, fit: &SeasonalFit, horizon_hours: f64, alpha: f64) -> Vec<DayRow> {
    fit.days
        .iter()
        .zip(1..=DAYS)
        .map(|(d, day)| DayRow {
            day,
            beta: d.params.map(|p| p.beta),
            sigma: d.params.map(|p| p.sigma),
            quantile_hours: d.params.and_then(|p| return_time_quantile(p, alpha).ok()),
            p_within: d.params.and_then(|p| prob_within(p, horizon_hours).ok()),
            h_below: weighted_freq_below(series, day, fit.bandwidth_days, horizon_hours).ok(),
            effective_n: d.effective_n,
            status: status_name(&d.status),
        })
        .collect()
}

pub const DAILY_HEADER: [&str; 7] = ["day", "beta", "sigma", "q75_hours", "p_within_72h", "h_below_72", "effective_n"];

pub fn write_daily_csv(path: &Path, rows: &[DayRow]) -> Result<()> {
    let mut out = CsvOut::create(path, &DAILY_HEADER)?;
    for r in rows {
        out.row([
            r.day.to_string(),
            fmt_float(r.beta),
            fmt_float(r.sigma),
            fmt_float(r.quantile_hours),
            fmt_float(r.p_within),
            fmt_float(r.h_below),
            fmt_float(Some(r.effective_n)),
        ])?;
    }
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use mlfpp_core::seasonal::{fit_seasonal, simulate_seasonal_series, simulate_years, permutation_test};
    use mlfpp_core::MlfParams;

    #[test]
    fn parallel_fit_matches_sequential() {
        let s = simulate_seasonal_series(400, 9, |_| MlfParams { beta: 0.8, sigma: 50.0 }).unwrap();
        let cfg = OptimizerConfig::default();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let par = pool.install(|| fit_seasonal_par(&s, 46.0, Method::Qb, None, &cfg)).unwrap();
        assert_eq!(par, fit_seasonal(&s, 46.0, Method::Qb, None, &cfg).unwrap());
    }

    #[test]
    fn parallel_permutation_matches_sequential() {
        let years = simulate_years(2001, 4, 5, |_, _| MlfParams { beta: 0.9, sigma: 10.0 }).unwrap();
        let cfg = PermutationConfig { permutations: 5, method: Method::Lm, seed: 2, ..Default::default() };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let par = pool.install(|| permutation_test_par(years.clone(), cfg.clone())).unwrap();
        assert_eq!(par, permutation_test(years, cfg).unwrap());
    }

    #[test]
    fn table_has_365_rows_with_consistent_metrics() {
        let s = simulate_seasonal_series(300, 4, |_| MlfParams { beta: 0.9, sigma: 40.0 }).unwrap();
        let fit = fit_seasonal_par(&s, 46.0, Method::Lm, None, &OptimizerConfig::default()).unwrap();
        let rows = daily_table(&s, &fit, 72.0, 0.75);
        assert_eq!(rows.len(), 365);
        for r in rows.iter().filter(|r| r.beta.is_some()) {
            let p = MlfParams { beta: r.beta.unwrap(), sigma: r.sigma.unwrap() };
            assert!((prob_within(p, r.quantile_hours.unwrap()).unwrap() - 0.75).abs() < 1e-8);
            assert!((0.0..=1.0).contains(&r.h_below.unwrap()));
        }
    }
}
