use super::lm::lm_params;
use super::{BetaCache, EstimateResult, Method, Prepared, Stopwatch, WeightedSample};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::optim::minimize_bounded;
use crate::{OptimizerConfig, Result};

/// Weighted maximum likelihood: maximises `Σ k̄ ln f_{β,σ}(w)`.
///
/// `objective_value` is the attained weighted log-likelihood.
pub fn estimate_ml(s: &WeightedSample, cfg: &OptimizerConfig) -> Result<EstimateResult> {
    let clock = Stopwatch::start();
    let p = Prepared::new(s);
    let start = cfg.project(lm_params(&p)?);
    let ln_values: Vec<f64> = p.values.iter().map(|x| x.ln()).collect();
    let mut cache = BetaCache::new();
    let objective = |q: crate::MlfParams| -> f64 {
        let Ok(law) = cache.get(q.beta) else { return f64::INFINITY };
        let ln_sigma = q.sigma.ln();
        let mut nll = 0.0;
        for (lx, w) in ln_values.iter().zip(&p.weights) {
            match law.log_pdf((lx - ln_sigma).exp()) {
                Ok(l) => nll -= w * (l - ln_sigma),
                Err(_) => return f64::INFINITY,
            }
        }
        nll
    };
    let (params, diag) = minimize_bounded(objective, start, cfg)?;
    let mut r = EstimateResult::from_optimizer(Method::Ml, params, &diag, -diag.objective);
    r.wall_time = clock.elapsed();
    Ok(r)
}
