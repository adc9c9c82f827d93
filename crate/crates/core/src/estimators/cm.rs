use super::lm::lm_params;
use super::{BetaCache, EstimateResult, Method, Prepared, Stopwatch, WeightedSample};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::optim::minimize_bounded;
use crate::{OptimizerConfig, Result};

/// Cramér–von Mises distance `n Σ k̄_(i) (m_i − F(x_(i)))²`.
///
/// `m_i = C_i − k̄_(i)/2` is the mid-rank of the `i`-th order statistic
/// under the cumulative sorted weight `C_i`; with uniform weights this is
/// `Σ ((2i − 1)/(2n) − F(x_(i)))²`.
pub fn estimate_cm(s: &WeightedSample, cfg: &OptimizerConfig) -> Result<EstimateResult> {
    let clock = Stopwatch::start();
    let p = Prepared::new(s);
    let start = cfg.project(lm_params(&p)?);
    let n = p.len() as f64;
    let mut cum = 0.0;
    let mid: Vec<f64> = p
        .weights
        .iter()
        .map(|w| {
            cum += w;
            cum - 0.5 * w
        })
        .collect();
    let mut cache = BetaCache::new();
    let objective = |q: crate::MlfParams| -> f64 {
        let Ok(law) = cache.get(q.beta) else { return f64::INFINITY };
        let mut acc = 0.0;
        for ((x, w), m) in p.values.iter().zip(&p.weights).zip(&mid) {
            match law.cdf(x / q.sigma) {
                Ok(f) => acc += w * (m - f) * (m - f),
                Err(_) => return f64::INFINITY,
            }
        }
        n * acc
    };
    let (params, diag) = minimize_bounded(objective, start, cfg)?;
    let mut r = EstimateResult::from_optimizer(Method::Cm, params, &diag, diag.objective);
    r.wall_time = clock.elapsed();
    Ok(r)
}
