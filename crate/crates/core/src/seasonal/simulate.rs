//! Synthetic seasonal data with known parameters.

use super::{calendar_day, is_leap_year, ReturnTimeSeries, YearEvents, DAYS, HOURS_PER_DAY};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::dist::StandardMlf;
use crate::rng::{derive_seed, Stream};
use crate::{MlfParams, Result};

/// `n` return times of a seasonal fractional Poisson process on a 365-day
/// year started at hour 0 of day 1; each return time is drawn with the
/// parameters of the day on which it starts.
pub fn simulate_seasonal_series<F>(n: usize, seed: u64, mut params_of_day: F) -> Result<ReturnTimeSeries>
where
    F: FnMut(u16) -> MlfParams,
{
    let mut rng = Stream::new(seed);
    let year = f64::from(DAYS) * HOURS_PER_DAY;
    let mut t = 0.0;
    let mut return_times = Vec::with_capacity(n);
    let mut start_days = Vec::with_capacity(n);
    for _ in 0..n {
        let day = ((t % year) / HOURS_PER_DAY) as u16 + 1;
        let p = params_of_day(day);
        p.validate()?;
        let w = p.sigma * StandardMlf::new(p.beta)?.sample_one(&mut rng);
        return_times.push(w);
        start_days.push(day);
        t += w;
    }
    ReturnTimeSeries::new(return_times, start_days)
}

/// Events of consecutive calendar years `first_year..first_year + n_years`
/// from one renewal process with an event at the start of the first year;
/// each return time uses the parameters of the year and calendar day of the
/// event that opens it.
pub fn simulate_years<F>(first_year: i32, n_years: usize, seed: u64, mut params_of: F) -> Result<Vec<YearEvents>>
where
    F: FnMut(i32, u16) -> MlfParams,
{
    let mut rng = Stream::new(seed);
    let mut out = Vec::with_capacity(n_years);
    // event time relative to the start of the current year
    let mut t = 0.0;
    for i in 0..n_years {
        let year = first_year + i as i32;
        let (events, next) = fill_year(year, t, &mut rng, &mut params_of)?;
        t = next;
        out.push(events);
    }
    Ok(out)
}

/// Like [`simulate_years`], but every year is its own renewal process
/// restarted with an event on January 1 and drawn from stream
/// `derive_seed(seed, i, 0)` for the `i`-th year. Years with identical
/// parameters are then exchangeable, which a single process with
/// infinite-mean waiting times does not give (it thins out as it ages).
pub fn simulate_independent_years<F>(first_year: i32, n_years: usize, seed: u64, mut params_of: F) -> Result<Vec<YearEvents>>
where
    F: FnMut(i32, u16) -> MlfParams,
{
    (0..n_years)
        .map(|i| {
            let mut rng = Stream::new(derive_seed(seed, i as u64, 0));
            fill_year(first_year + i as i32, 0.0, &mut rng, &mut params_of).map(|(events, _)| events)
        })
        .collect()
}

/// Events of `year` from the first one at hour `t`; also returns the next
/// event time relative to the start of the following year.
fn fill_year<F>(year: i32, mut t: f64, rng: &mut Stream, params_of: &mut F) -> Result<(YearEvents, f64)>
where
    F: FnMut(i32, u16) -> MlfParams,
{
    let leap = is_leap_year(year);
    let length = if leap { 366.0 } else { 365.0 } * HOURS_PER_DAY;
    let mut hours = Vec::new();
    while t < length {
        hours.push(t);
        let day = calendar_day((t / HOURS_PER_DAY) as u16 + 1, leap)?;
        let p = params_of(year, day);
        p.validate()?;
        let w = p.sigma * StandardMlf::new(p.beta)?.sample_one(rng);
        // a draw below the time resolution would repeat the event time
        t += w.max(1e-9 * length);
    }
    Ok((YearEvents::new(year, hours)?, t - length))
}
