use core::f64::consts::PI;

use super::{EstimateResult, Method, Prepared, Stopwatch, WeightedSample};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::special::EULER_GAMMA;
use crate::{Error, MlfParams, Result};

/// Smallest `β` the closed form may return.
const BETA_FLOOR: f64 = 1e-4;

/// Log-moment estimator.
///
/// From `E[ln X] = ln σ − γ` and `Var(ln X) = (π²/6)(2/β² − 1)`, with the
/// weighted log-mean and the reliability-weighted variance
/// `ŝ² = Σ k̄ (ln w − μ̂)² / (1 − V)`, `V = Σ k̄²`.
pub fn estimate_lm(s: &WeightedSample) -> Result<EstimateResult> {
    let clock = Stopwatch::start();
    let p = Prepared::new(s);
    let params = lm_params(&p)?;
    Ok(EstimateResult {
        params,
        method: Method::Lm,
        converged: true,
        objective_value: 0.0,
        iterations: 0,
        evaluations: 0,
        wall_time: clock.elapsed(),
        quantile_set: None,
        admissibility: None,
    })
}

pub(crate) fn lm_params(p: &Prepared) -> Result<MlfParams> {
    p.check_estimable()?;
    // only reachable through rounding once two weights are positive
    let v: f64 = p.weights.iter().map(|w| w * w).sum();
    if v >= 1.0 {
        return Err(Error::Weighting(v));
    }
    let mut mu = 0.0;
    for (x, w) in p.values.iter().zip(&p.weights) {
        mu += w * x.ln();
    }
    let mut ss = 0.0;
    for (x, w) in p.values.iter().zip(&p.weights) {
        let d = x.ln() - mu;
        ss += w * d * d;
    }
    let s2 = ss / (1.0 - v);
    let beta = (PI * core::f64::consts::SQRT_2 / (PI * PI + 6.0 * s2).sqrt()).clamp(BETA_FLOOR, 1.0);
    Ok(MlfParams { beta, sigma: (mu + EULER_GAMMA).exp() })
}
