use super::{circular_distance, weight_table, ReturnTimeSeries};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::{dist, Error, MlfParams, Result};

/// Probability of at least one further event within `horizon`: `F(horizon)`.
pub fn prob_within(p: MlfParams, horizon: f64) -> Result<f64> {
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::Domain("horizon must be positive"));
    }
    dist::cdf(p, horizon)
}

/// The α-quantile of the return time.
pub fn return_time_quantile(p: MlfParams, alpha: f64) -> Result<f64> {
    dist::quantile(p, alpha)
}

/// Kernel-weighted share of return times below `threshold` for day `j`,
/// with weights normalized over the day's window.
pub fn weighted_freq_below(series: &ReturnTimeSeries, j: u16, c: f64, threshold: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParams("bandwidth must be positive and finite"));
    }
    let table = weight_table(c);
    let (mut below, mut total) = (0.0, 0.0);
    for (&w, &t) in series.return_times().iter().zip(series.start_days()) {
        let k = table[usize::from(circular_distance(t, j)?)];
        total += k;
        if w < threshold {
            below += k;
        }
    }
    if total <= 0.0 {
        return Err(Error::EmptyWindow { day: j });
    }
    Ok(below / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::E;

    #[test]
    fn prob_within_examples() {
        let p = MlfParams::new(1.0, 72.0).unwrap();
        assert!((prob_within(p, 72.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        // 1 − e·erfc(1)
        let half = MlfParams::new(0.5, 72.0).unwrap();
        let erfc1 = 0.157_299_207_050_285_13;
        assert!((prob_within(half, 72.0).unwrap() - (1.0 - E * erfc1)).abs() < 1e-10);
        assert!(prob_within(half, 1e-12).unwrap() < 1e-5);
        assert!(prob_within(half, 0.0).is_err());
    }

    #[test]
    fn quantile_examples() {
        let p = MlfParams::new(1.0, 100.0).unwrap();
        assert!((return_time_quantile(p, 0.75).unwrap() - 100.0 * 4f64.ln()).abs() < 1e-10);
        let q = MlfParams::new(0.7, 100.0).unwrap();
        assert!(return_time_quantile(q, 0.5).unwrap() < return_time_quantile(q, 0.75).unwrap());
        for a in [0.1, 0.5, 0.75, 0.95] {
            assert!((prob_within(q, return_time_quantile(q, a).unwrap()).unwrap() - a).abs() < 1e-8);
        }
    }

    #[test]
    fn frequency_examples() {
        let s = ReturnTimeSeries::new(vec![10.0, 20.0], vec![5, 5]).unwrap();
        assert_eq!(weighted_freq_below(&s, 5, 46.0, 100.0).unwrap(), 1.0);
        assert_eq!(weighted_freq_below(&s, 5, 46.0, 5.0).unwrap(), 0.0);
        assert_eq!(weighted_freq_below(&s, 5, 46.0, 15.0).unwrap(), 0.5);
        assert!(weighted_freq_below(&s, 200, 46.0, 15.0).is_err());
    }
}
