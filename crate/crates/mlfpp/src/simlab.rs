//! Monte Carlo machinery: the settings grid, per-setting MSE and timing,
//! relative efficiency, the quantile-set search criterion and sensitivity
//! curves.
//!
//! Replicate `r` of a setting draws its sample from
//! `derive_seed(setting.seed, r, 0)`, and grid settings get
//! `derive_seed(master, index, 0)`, so every number is independent of
//! scheduling and worker count.

use mlfpp_core::dist::{quantile, sample};
use mlfpp_core::estimators::estimate;
use mlfpp_core::rng::derive_seed;
use mlfpp_core::{Method, MlfParams, OptimizerConfig, QuantileSet, WeightedSample};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub const PAPER_BETAS: [f64; 9] = [0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0];
pub const PAPER_SIGMAS: [f64; 9] = [25.0, 50.0, 100.0, 250.0, 500.0, 750.0, 1000.0, 1500.0, 2000.0];
pub const PAPER_SIZES: [usize; 4] = [200, 500, 1000, 5000];
pub const PAPER_REPLICATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimSetting {
    pub beta: f64,
    pub sigma: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl SimSetting {
    pub fn new(beta: f64, sigma: f64, n: usize, replicates: usize, seed: u64) -> Result<Self> {
        MlfParams::new(beta, sigma)?;
        if n < 2 {
            return Err(Error::Config("sample size must be at least 2".into()));
        }
        if replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        Ok(Self { beta, sigma, n, replicates, seed })
    }

    pub fn params(&self) -> MlfParams {
        MlfParams { beta: self.beta, sigma: self.sigma }
    }

    pub fn replicate_seed(&self, r: usize) -> u64 {
        derive_seed(self.seed, r as u64, 0)
    }
}

/// Cartesian grid `betas × sigmas × sizes` (β outermost), seeded from
/// `master`.
pub fn grid(betas: &[f64], sigmas: &[f64], sizes: &[usize], replicates: usize, master: u64) -> Result<Vec<SimSetting>> {
    let mut out = Vec::with_capacity(betas.len() * sigmas.len() * sizes.len());
    for &beta in betas {
        for &sigma in sigmas {
            for &n in sizes {
                let seed = derive_seed(master, out.len() as u64, 0);
                out.push(SimSetting::new(beta, sigma, n, replicates, seed)?);
            }
        }
    }
    Ok(out)
}

/// The 9 × 9 × 4 grid of the simulation study.
pub fn paper_grid(replicates: usize, master: u64) -> Result<Vec<SimSetting>> {
    grid(&PAPER_BETAS, &PAPER_SIGMAS, &PAPER_SIZES, replicates, master)
}

/// An estimator with its quantile set (defaulted per method when absent).
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub method: Method,
    pub quantiles: Option<QuantileSet>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self { method, quantiles: None }
    }

    pub fn with_quantiles(method: Method, qs: QuantileSet) -> Self {
        Self { method, quantiles: Some(qs) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateEstimate {
    pub replicate: usize,
    pub beta: f64,
    pub sigma: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodStats {
    pub method: Method,
    pub quantiles: Option<Vec<f64>>,
    /// Successful fits in replicate order.
    pub estimates: Vec<ReplicateEstimate>,
    /// Errors and non-converged fits; excluded from every statistic.
    pub failures: usize,
    pub mse_beta: f64,
    pub mse_sigma: f64,
    pub rmse_beta: f64,
    pub rmse_sigma: f64,
    pub bias_beta: f64,
    pub bias_sigma: f64,
    /// Population variance (divisor = number of successful fits).
    pub var_beta: f64,
    pub var_sigma: f64,
    pub mean_time_seconds: f64,
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    xs.sum::<f64>() / n as f64
}

impl MethodStats {
    /// Statistics of `estimates` against the true parameters; NaN when no
    /// fit succeeded.
    pub fn from_estimates(method: Method, quantiles: Option<Vec<f64>>, truth: MlfParams, estimates: Vec<ReplicateEstimate>, failures: usize) -> Self {
        let mse_beta = mean(estimates.iter().map(|e| (e.beta - truth.beta).powi(2)));
        let mse_sigma = mean(estimates.iter().map(|e| (e.sigma - truth.sigma).powi(2)));
        let mean_beta = mean(estimates.iter().map(|e| e.beta));
        let mean_sigma = mean(estimates.iter().map(|e| e.sigma));
        let var_beta = mean(estimates.iter().map(|e| (e.beta - mean_beta).powi(2)));
        let var_sigma = mean(estimates.iter().map(|e| (e.sigma - mean_sigma).powi(2)));
        Self {
            method,
            quantiles,
            mean_time_seconds: mean(estimates.iter().map(|e| e.seconds)),
            estimates,
            failures,
            mse_beta,
            mse_sigma,
            rmse_beta: mse_beta.sqrt(),
            rmse_sigma: mse_sigma.sqrt(),
            bias_beta: mean_beta - truth.beta,
            bias_sigma: mean_sigma - truth.sigma,
            var_beta,
            var_sigma,
        }
    }

    pub fn mean_beta(&self) -> f64 {
        mean(self.estimates.iter().map(|e| e.beta))
    }

    pub fn mean_sigma(&self) -> f64 {
        mean(self.estimates.iter().map(|e| e.sigma))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub setting: SimSetting,
    pub methods: Vec<MethodStats>,
}

impl SimResult {
    pub fn stats(&self, method: Method) -> Option<&MethodStats> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Outcome of one fit: estimate and wall time, or failure.
type Fit = Option<(f64, f64, f64)>;

fn fit_once(spec: &MethodSpec, s: &WeightedSample, cfg: &OptimizerConfig) -> Fit {
    match estimate(spec.method, s, spec.quantiles.as_ref(), cfg) {
        Ok(r) if r.converged => Some((r.params.beta, r.params.sigma, r.wall_time.as_secs_f64())),
        _ => None,
    }
}

/// Draws `st.replicates` samples and fits every method to each; replicates
/// run in parallel on the current rayon pool.
pub fn run_setting(st: &SimSetting, methods: &[MethodSpec], cfg: &OptimizerConfig) -> Result<SimResult> {
    st.params().validate()?;
    if methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    let fits: Vec<Vec<Fit>> = (0..st.replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<Fit>> {
            let x = sample(st.params(), st.n, st.replicate_seed(r))?;
            let s = WeightedSample::new(x)?;
            Ok(methods.iter().map(|m| fit_once(m, &s, cfg)).collect())
        })
        .collect::<Result<_>>()?;
    let methods = methods
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let mut estimates = Vec::new();
            let mut failures = 0;
            for (r, per_method) in fits.iter().enumerate() {
                match per_method[k] {
                    Some((beta, sigma, seconds)) => estimates.push(ReplicateEstimate { replicate: r, beta, sigma, seconds }),
                    None => failures += 1,
                }
            }
            let quantiles = spec.quantiles.clone().or_else(|| spec.method.default_quantiles()).map(|q| q.alphas().to_vec());
            MethodStats::from_estimates(spec.method, quantiles, st.params(), estimates, failures)
        })
        .collect();
    Ok(SimResult { setting: *st, methods })
}

/// `MSE(reference) / MSE(other)`; above 1 when `other` is more accurate.
pub fn efficiency_ratio(reference_mse: f64, other_mse: f64) -> Option<f64> {
    let r = reference_mse / other_mse;
    (reference_mse.is_finite() && other_mse.is_finite() && other_mse > 0.0 && r.is_finite()).then_some(r)
}

/// Relative efficiency of `other` against `reference` for `(β, σ)`.
pub fn relative_efficiency(reference: &MethodStats, other: &MethodStats) -> Result<(f64, f64)> {
    match (efficiency_ratio(reference.mse_beta, other.mse_beta), efficiency_ratio(reference.mse_sigma, other.mse_sigma)) {
        (Some(b), Some(s)) => Ok((b, s)),
        _ => Err(Error::UndefinedEfficiency { settings: vec![0] }),
    }
}

/// Mean over settings of `MSE_ML(β̂)/MSE_QB(β̂) + MSE_ML(σ̂)/MSE_QB(σ̂)`;
/// `pairs[i]` holds the ML and QB statistics of setting `i`.
pub fn search_criterion(pairs: &[(&MethodStats, &MethodStats)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    let mut bad = Vec::new();
    let mut total = 0.0;
    for (i, (ml, qb)) in pairs.iter().enumerate() {
        match relative_efficiency(ml, qb) {
            Ok((b, s)) => total += b + s,
            Err(_) => bad.push(i),
        }
    }
    if !bad.is_empty() {
        return Err(Error::UndefinedEfficiency { settings: bad });
    }
    Ok(total / pairs.len() as f64)
}

/// Search criterion of `qs` over `grid`, fitting ML and QB to the same
/// samples.
pub fn quantile_search_criterion(grid: &[SimSetting], qs: &QuantileSet, cfg: &OptimizerConfig) -> Result<f64> {
    let methods = [MethodSpec::new(Method::Ml), MethodSpec::with_quantiles(Method::Qb, qs.clone())];
    let results: Vec<SimResult> = grid.iter().map(|st| run_setting(st, &methods, cfg)).collect::<Result<_>>()?;
    let pairs: Vec<_> = results.iter().map(|r| (&r.methods[0], &r.methods[1])).collect();
    search_criterion(&pairs)
}

/// `points` contamination values evenly spaced between the 0.001 and 0.999
/// quantiles of `p` (the lower one alone when `points == 1`).
pub fn contamination_grid(p: MlfParams, points: usize) -> Result<Vec<f64>> {
    let lo = quantile(p, 0.001)?;
    let hi = quantile(p, 0.999)?;
    Ok(match points {
        0 => Vec::new(),
        1 => vec![lo],
        k => (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCurve {
    pub method: Method,
    pub base: MlfParams,
    pub x: Vec<f64>,
    /// `(n + 1)(β̂(x₁…xₙ, x) − β̂(x₁…xₙ))`; `None` where the fit failed.
    pub sc_beta: Vec<Option<f64>>,
    pub sc_sigma: Vec<Option<f64>>,
}

impl SensitivityCurve {
    /// Grid indices without a value.
    pub fn gaps(&self) -> Vec<usize> {
        (0..self.x.len()).filter(|&i| self.sc_beta[i].is_none()).collect()
    }
}

/// Sensitivity curve of `spec` on `base_sample` over `x_grid`.
pub fn sensitivity_curve(spec: &MethodSpec, base_sample: &[f64], x_grid: &[f64], cfg: &OptimizerConfig) -> Result<SensitivityCurve> {
    let fit = |xs: Vec<f64>| -> Result<MlfParams> {
        let r = estimate(spec.method, &WeightedSample::new(xs)?, spec.quantiles.as_ref(), cfg)?;
        if !r.converged {
            return Err(Error::Core(mlfpp_core::Error::Estimation("fit did not converge")));
        }
        Ok(r.params)
    };
    let base = fit(base_sample.to_vec())?;
    let scale = (base_sample.len() + 1) as f64;
    let (sc_beta, sc_sigma) = x_grid
        .par_iter()
        .map(|&x| {
            let mut xs = base_sample.to_vec();
            xs.push(x);
            match fit(xs) {
                Ok(p) => (Some(scale * (p.beta - base.beta)), Some(scale * (p.sigma - base.sigma))),
                Err(_) => (None, None),
            }
        })
        .unzip();
    Ok(SensitivityCurve { method: spec.method, base, x: x_grid.to_vec(), sc_beta, sc_sigma })
}
