use super::lm::lm_params;
use super::{BetaCache, EstimateResult, Method, Prepared, Stopwatch, WeightedSample};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::dist::QuantileSet;
use crate::optim::{minimize_bounded, minimize_objective, Objective};
use crate::{Error, MlfParams, OptimizerConfig, Result};

/// Slack on the tail-weight comparison so `1/n` sums that round low still
/// select the intended order statistic.
const TAIL_SLACK: f64 = 1e-12;

/// Weighted empirical α-quantile `w_(ℓ)`, `ℓ = max{h : Σ_{i≥h} k̄_(i) ≥ 1 − α}`.
///
/// Unweighted samples use `k̄ = 1/n`, which selects the `(⌊nα⌋ + 1)`-th
/// order statistic without interpolation.
pub fn empirical_quantile(s: &WeightedSample, alpha: f64) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::Domain("empirical quantile of an empty sample"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain("quantile level must lie in (0, 1)"));
    }
    let p = Prepared::new(s);
    Ok(p.quantiles(&[alpha])[0])
}

impl Prepared {
    /// Empirical quantiles at each level; `alphas` must lie in `(0, 1)` and
    /// the sample must be non-empty.
    pub fn quantiles(&self, alphas: &[f64]) -> Vec<f64> {
        // tail[h] = Σ_{i ≥ h} k̄_(i), non-increasing in h
        let n = self.len();
        let mut tail = vec![0.0; n];
        let mut acc = 0.0;
        for h in (0..n).rev() {
            acc += self.weights[h];
            tail[h] = acc;
        }
        alphas
            .iter()
            .map(|&a| {
                let need = (1.0 - a) - TAIL_SLACK;
                // first h with tail[h] < need, minus one
                let ell = tail.partition_point(|&t| t >= need).max(1) - 1;
                self.values[ell]
            })
            .collect()
    }
}

/// Quantile least squares: minimises `Σ (σ Q_β(α_i) − q̂_i)²`.
///
/// The optimizer sees the sum divided by the mean of `q̂²` so the gradient
/// tolerance does not depend on the data scale; `objective_value` is the raw
/// sum.
pub fn estimate_qls(s: &WeightedSample, qs: &QuantileSet, cfg: &OptimizerConfig) -> Result<EstimateResult> {
    let clock = Stopwatch::start();
    let p = Prepared::new(s);
    let start = cfg.project(lm_params(&p)?);
    let q_hat = p.quantiles(qs.alphas());
    let scale = q_hat.iter().map(|q| q * q).sum::<f64>() / q_hat.len() as f64;
    let mut cache = BetaCache::new();
    let mut unit_q: Vec<f64> = Vec::with_capacity(q_hat.len());
    let mut unit_q_beta = f64::NAN;
    let objective = |q: MlfParams| -> f64 {
        if unit_q_beta.to_bits() != q.beta.to_bits() {
            unit_q.clear();
            unit_q_beta = f64::NAN;
            let Ok(law) = cache.get(q.beta) else { return f64::INFINITY };
            for &a in qs.alphas() {
                match law.quantile(a) {
                    Ok(z) => unit_q.push(z),
                    Err(_) => return f64::INFINITY,
                }
            }
            unit_q_beta = q.beta;
        }
        let mut acc = 0.0;
        for (z, qh) in unit_q.iter().zip(&q_hat) {
            let d = q.sigma * z - qh;
            acc += d * d;
        }
        acc / scale
    };
    let (params, diag) = minimize_bounded(objective, start, cfg)?;
    let mut r = EstimateResult::from_optimizer(Method::Qls, params, &diag, diag.objective * scale);
    r.quantile_set = Some(qs.clone());
    r.wall_time = clock.elapsed();
    Ok(r)
}

/// Quantile-based estimator: minimises `Σ (α_i − F_{β,σ}(q̂_i))²`.
///
/// The result records the quantile set and its admissibility; a set whose
/// admissibility is not established still produces an estimate. The
/// objective supplies its analytic gradient through `∂F/∂β` and
/// `∂F/∂σ = −(x/σ) f(x)`, so the search rarely changes `β` without moving.
pub fn estimate_qb(s: &WeightedSample, qs: &QuantileSet, cfg: &OptimizerConfig) -> Result<EstimateResult> {
    let clock = Stopwatch::start();
    let p = Prepared::new(s);
    let start = cfg.project(lm_params(&p)?);
    let mut objective =
        QbObjective { alphas: qs.alphas(), q_hat: p.quantiles(qs.alphas()), cache: BetaCache::new(), cdf: None, gauss_newton: None };
    let (params, diag) = minimize_objective(&mut objective, start, cfg)?;
    let mut r = EstimateResult::from_optimizer(Method::Qb, params, &diag, diag.objective);
    r.quantile_set = Some(qs.clone());
    r.admissibility = Some(qs.admissibility());
    r.wall_time = clock.elapsed();
    Ok(r)
}

struct QbObjective<'a> {
    alphas: &'a [f64],
    q_hat: Vec<f64>,
    cache: BetaCache,
    /// `F(q̂_i/σ)` at the last point `value` saw; the optimizer asks for the
    /// gradient right after the value at the same point.
    cdf: Option<(MlfParams, Vec<f64>)>,
    /// `2 JᵀJ` of the residuals at the last gradient point.
    gauss_newton: Option<(MlfParams, [[f64; 2]; 2])>,
}

impl Objective for QbObjective<'_> {
    fn value(&mut self, q: MlfParams) -> f64 {
        let mut stored = self.cdf.take().map(|(_, v)| v).unwrap_or_default();
        stored.clear();
        let Ok(law) = self.cache.get(q.beta) else { return f64::INFINITY };
        let mut acc = 0.0;
        for (a, qh) in self.alphas.iter().zip(&self.q_hat) {
            match law.cdf(qh / q.sigma) {
                Ok(f) => {
                    acc += (a - f) * (a - f);
                    stored.push(f);
                }
                Err(_) => return f64::INFINITY,
            }
        }
        self.cdf = Some((q, stored));
        acc
    }

    fn gradient(&mut self, q: MlfParams) -> Option<[f64; 2]> {
        self.gauss_newton = None;
        let known = match &self.cdf {
            Some((at, v)) if *at == q => Some(v),
            _ => None,
        };
        let law = self.cache.get(q.beta).ok()?;
        let mut g = [0.0; 2];
        let mut jtj = [[0.0; 2]; 2];
        for (level, (a, qh)) in self.alphas.iter().zip(&self.q_hat).enumerate() {
            let z = qh / q.sigma;
            let f = match known {
                Some(v) => v[level],
                None => law.cdf(z).ok()?,
            };
            let resid = a - f;
            // ∂r/∂β and ∂r/∂σ of r = α − F(q̂/σ)
            let jac = [-law.d_cdf_d_beta(z).ok()?.value, z * law.pdf(z).ok()? / q.sigma];
            for i in 0..2 {
                g[i] += 2.0 * resid * jac[i];
                for k in 0..2 {
                    jtj[i][k] += 2.0 * jac[i] * jac[k];
                }
            }
        }
        self.gauss_newton = Some((q, jtj));
        Some(g)
    }

    fn curvature(&mut self, q: MlfParams) -> Option<[[f64; 2]; 2]> {
        match self.gauss_newton {
            Some((at, b)) if at == q => Some(b),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_three() {
        let s = WeightedSample::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(empirical_quantile(&s, 0.5).unwrap(), 2.0);
    }

    #[test]
    fn heavy_first_weight() {
        let s = WeightedSample::with_weights(vec![5.0, 10.0], vec![0.9, 0.1]).unwrap();
        assert_eq!(empirical_quantile(&s, 0.5).unwrap(), 5.0);
        assert_eq!(empirical_quantile(&s, 0.95).unwrap(), 10.0);
    }

    #[test]
    fn extreme_levels() {
        let s = WeightedSample::new(vec![4.0, 1.0, 9.0, 2.0]).unwrap();
        assert_eq!(empirical_quantile(&s, 1e-9).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&s, 1.0 - 1e-9).unwrap(), 9.0);
        // the (⌊nα⌋ + 1)-th order statistic
        assert_eq!(empirical_quantile(&s, 0.24).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&s, 0.25).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&s, 0.75).unwrap(), 9.0);
    }

    #[test]
    fn rejects_bad_input() {
        let s = WeightedSample::new(vec![]).unwrap();
        assert!(empirical_quantile(&s, 0.5).is_err());
        let s = WeightedSample::new(vec![1.0]).unwrap();
        assert!(empirical_quantile(&s, 0.0).is_err());
        assert!(empirical_quantile(&s, 1.0).is_err());
    }
}
