//! The Mittag-Leffler distribution `F(x) = 1 − E_β(−(x/σ)^β)`.
//!
//! [`StandardMlf`] is the unit-scale law for one `β` and caches the
//! Mittag-Leffler coefficient tables; estimators reuse it across many `σ`.
//! [`MlfDistribution`] adds the scale.

use core::f64::consts::PI;

#[allow(unused_imports)]
use crate::prelude::*;
use crate::rng::Stream;
use crate::special::{MittagLeffler, MlfEvalConfig, Regime};
use crate::{Error, Result};

/// Tail parameter `β ∈ (0, 1]` and scale `σ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlfParams {
    pub beta: f64,
    pub sigma: f64,
}

impl MlfParams {
    pub fn new(beta: f64, sigma: f64) -> Result<Self> {
        let p = Self { beta, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParams("beta must lie in (0, 1]"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParams("sigma must be positive and finite"));
        }
        Ok(())
    }
}

/// Below this level `∂F/∂β < 0` at the α-quantile.
pub const ADMISSIBLE_LOW: f64 = 0.1797;
/// Above this level `∂F/∂β > 0` at the α-quantile (numerical finding).
pub const ADMISSIBLE_HIGH: f64 = 0.5935;
/// Below this level the negative sign is proven for every `β`.
pub const ADMISSIBLE_PROVEN_LOW: f64 = 0.0297;

/// Strictly increasing probabilities `0 < α_1 < … < α_r < 1`, `r ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuantileSet {
    alphas: Vec<f64>,
}

impl QuantileSet {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::InvalidParams("a quantile set needs at least two levels"));
        }
        if alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::InvalidParams("quantile levels must lie in (0, 1)"));
        }
        if alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("quantile levels must be strictly increasing"));
        }
        Ok(Self { alphas })
    }

    /// Default set of the QB estimator: (0.1, 0.3, 0.5, 0.8, 0.925).
    pub fn qb_default() -> Self {
        Self { alphas: vec![0.1, 0.3, 0.5, 0.8, 0.925] }
    }

    /// Default set of the QLS estimator: equidistant (0.1, 0.3, 0.5, 0.7, 0.9).
    pub fn qls_default() -> Self {
        Self { alphas: vec![0.1, 0.3, 0.5, 0.7, 0.9] }
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn admissibility(&self) -> Admissibility {
        check_quantile_admissibility(self)
    }
}

/// How well a quantile set is known to identify `(β, σ)` under QB estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Admissibility {
    /// A level below 0.0297 and one above 0.5935.
    Guaranteed,
    /// A level below 0.1797 and one above 0.5935.
    Conjectured,
    NotEstablished,
}

impl core::fmt::Display for Admissibility {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Admissibility::Guaranteed => "guaranteed",
            Admissibility::Conjectured => "conjectured",
            Admissibility::NotEstablished => "not-established",
        })
    }
}

pub fn check_quantile_admissibility(qs: &QuantileSet) -> Admissibility {
    let lo = qs.alphas[0];
    let hi = qs.alphas[qs.alphas.len() - 1];
    if lo < ADMISSIBLE_LOW && hi > ADMISSIBLE_HIGH {
        if lo < ADMISSIBLE_PROVEN_LOW {
            Admissibility::Guaranteed
        } else {
            Admissibility::Conjectured
        }
    } else {
        Admissibility::NotEstablished
    }
}

/// `∂F/∂β` together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaDerivative {
    pub value: f64,
    pub regime: Regime,
    /// The analytic route failed and a central difference (step 1e-6) was used.
    pub finite_difference: bool,
}

/// Unit-scale Mittag-Leffler law for a fixed `β`.
#[derive(Debug, Clone)]
pub struct StandardMlf {
    ml: MittagLeffler,
}

impl StandardMlf {
    pub fn new(beta: f64) -> Result<Self> {
        Self::with_config(beta, MlfEvalConfig::default())
    }

    pub fn with_config(beta: f64, cfg: MlfEvalConfig) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParams("beta must lie in (0, 1]"));
        }
        Ok(Self { ml: MittagLeffler::new(beta, cfg)? })
    }

    /// The law for another `β` with the same evaluation policy; cheaper
    /// than [`StandardMlf::with_config`] once this law has used the contour.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParams("beta must lie in (0, 1]"));
        }
        Ok(Self { ml: self.ml.with_beta(beta)? })
    }

    pub fn beta(&self) -> f64 {
        self.ml.beta()
    }

    pub fn evaluator(&self) -> &MittagLeffler {
        &self.ml
    }

    fn tau(&self, z: f64) -> f64 {
        let beta = self.beta();
        if beta == 1.0 {
            z
        } else {
            z.powf(beta)
        }
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        if z.is_nan() {
            return Err(Error::Domain("cdf argument must not be NaN"));
        }
        if z <= 0.0 {
            return Ok(0.0);
        }
        self.ml.one_minus_e(self.tau(z))
    }

    /// `1 − F(z)`.
    pub fn sf(&self, z: f64) -> Result<f64> {
        if z.is_nan() {
            return Err(Error::Domain("survival argument must not be NaN"));
        }
        if z <= 0.0 {
            return Ok(1.0);
        }
        self.ml.e(self.tau(z))
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        check_positive(z)?;
        if z == f64::INFINITY {
            return Ok(0.0);
        }
        let tau = self.tau(z);
        Ok(tau / z * self.ml.e_beta_beta(tau)?)
    }

    pub fn log_pdf(&self, z: f64) -> Result<f64> {
        check_positive(z)?;
        if z == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let beta = self.beta();
        let ln_z = z.ln();
        if beta == 1.0 {
            return Ok(-z);
        }
        let tau = (beta * ln_z).exp();
        Ok((beta - 1.0) * ln_z + self.ml.ln_e_beta_beta(tau)?)
    }

    /// `∂F/∂β` at fixed `z`.
    pub fn d_cdf_d_beta(&self, z: f64) -> Result<BetaDerivative> {
        check_positive(z)?;
        match self.ml.d_dbeta_at_power(z) {
            Ok((d, regime)) => Ok(BetaDerivative { value: -d, regime, finite_difference: false }),
            Err(Error::Evaluation { regime, .. }) => {
                let h = 1e-6;
                let beta = self.beta();
                let cfg = *self.ml.config();
                let (lo, hi) = if beta + h > 1.0 { (beta - 2.0 * h, beta) } else { (beta - h, beta + h) };
                let f_lo = StandardMlf::with_config(lo, cfg)?.cdf(z)?;
                let f_hi = StandardMlf::with_config(hi, cfg)?.cdf(z)?;
                Ok(BetaDerivative { value: (f_hi - f_lo) / (hi - lo), regime, finite_difference: true })
            }
            Err(e) => Err(e),
        }
    }

    /// Unit-scale quantile.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain("quantile level must lie in (0, 1)"));
        }
        let beta = self.beta();
        if beta == 1.0 {
            return Ok(-(-alpha).ln_1p());
        }
        // residual in the better-conditioned tail: F − α below the median, α − S above
        let upper = alpha > 0.5;
        let target = if upper { 1.0 - alpha } else { alpha };
        let resid = |z: f64| -> Result<f64> {
            Ok(if upper { target - self.sf(z)? } else { self.cdf(z)? - target })
        };

        // the start may underflow for tiny β; the shrink loop then reports it
        let mut lo = (0.01 * alpha.powf(1.0 / beta)).max(1e-300);
        let mut r_lo = resid(lo)?;
        while r_lo >= 0.0 {
            lo *= 0.01;
            r_lo = resid(lo)?;
            if lo < 1e-300 {
                return Err(Error::Estimation("quantile bracket underflow"));
            }
        }
        let mut hi = lo * 4.0;
        let mut r_hi = resid(hi)?;
        while r_hi < 0.0 {
            lo = hi;
            hi *= 4.0;
            r_hi = resid(hi)?;
            if !hi.is_finite() {
                return Err(Error::Estimation("quantile bracket overflow"));
            }
        }
        if r_hi == 0.0 {
            return Ok(hi);
        }

        // safeguarded Newton in y = ln z
        let (mut a, mut b) = (lo.ln(), hi.ln());
        let mut y = 0.5 * (a + b);
        for _ in 0..200 {
            let z = y.exp();
            let r = resid(z)?;
            if r == 0.0 {
                return Ok(z);
            }
            if r < 0.0 {
                a = y;
            } else {
                b = y;
            }
            // dr/dy = f(z)·z for both residual forms
            let slope = self.pdf(z)? * z;
            let mut next = y - r / slope;
            if !(next > a && next < b) || !next.is_finite() {
                next = 0.5 * (a + b);
            }
            if (next - y).abs() <= 4.0 * f64::EPSILON * y.abs().max(1.0) || b - a <= 4.0 * f64::EPSILON * y.abs().max(1.0) {
                return Ok(next.exp());
            }
            y = next;
        }
        Ok(y.exp())
    }

    /// One variate by the Kozubowski–Rachev representation.
    ///
    /// Consumes two uniforms, `u` then `v`: `T = −ln u · (sin(βπ(1−v)) / sin(βπv))^{1/β}`.
    /// For `β = 1` only `u` is drawn and `T = −ln u`.
    pub fn sample_one(&self, rng: &mut Stream) -> f64 {
        let beta = self.beta();
        let u = rng.open01();
        let e = -u.ln();
        if beta == 1.0 {
            return e;
        }
        let v = rng.open01();
        let ratio = (beta * PI * (1.0 - v)).sin() / (beta * PI * v).sin();
        e * ratio.powf(1.0 / beta)
    }
}

fn check_positive(z: f64) -> Result<()> {
    if z > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain("argument must be positive"))
    }
}

/// Mittag-Leffler law with scale.
#[derive(Debug, Clone)]
pub struct MlfDistribution {
    params: MlfParams,
    standard: StandardMlf,
}

impl MlfDistribution {
    pub fn new(params: MlfParams) -> Result<Self> {
        Self::with_config(params, MlfEvalConfig::default())
    }

    pub fn with_config(params: MlfParams, cfg: MlfEvalConfig) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, standard: StandardMlf::with_config(params.beta, cfg)? })
    }

    pub fn params(&self) -> MlfParams {
        self.params
    }

    pub fn standard(&self) -> &StandardMlf {
        &self.standard
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain("cdf argument must be finite"));
        }
        self.standard.cdf(x / self.params.sigma)
    }

    pub fn sf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain("survival argument must be finite"));
        }
        self.standard.sf(x / self.params.sigma)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        Ok(self.standard.pdf(x / self.params.sigma)? / self.params.sigma)
    }

    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        Ok(self.standard.log_pdf(x / self.params.sigma)? - self.params.sigma.ln())
    }

    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        Ok(self.params.sigma * self.standard.quantile(alpha)?)
    }

    /// `∂F/∂σ = −(x/σ)·f(x)`.
    pub fn d_cdf_d_sigma(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        let z = x / self.params.sigma;
        Ok(-z * self.standard.pdf(z)? / self.params.sigma)
    }

    pub fn d_cdf_d_beta(&self, x: f64) -> Result<BetaDerivative> {
        check_positive(x)?;
        self.standard.d_cdf_d_beta(x / self.params.sigma)
    }

    pub fn sample_into(&self, rng: &mut Stream, out: &mut Vec<f64>, n: usize) {
        out.reserve(n);
        for _ in 0..n {
            out.push(self.params.sigma * self.standard.sample_one(rng));
        }
    }
}

pub fn cdf(p: MlfParams, x: f64) -> Result<f64> {
    MlfDistribution::new(p)?.cdf(x)
}

pub fn pdf(p: MlfParams, x: f64) -> Result<f64> {
    MlfDistribution::new(p)?.pdf(x)
}

pub fn log_pdf(p: MlfParams, x: f64) -> Result<f64> {
    MlfDistribution::new(p)?.log_pdf(x)
}

pub fn quantile(p: MlfParams, alpha: f64) -> Result<f64> {
    MlfDistribution::new(p)?.quantile(alpha)
}

pub fn d_cdf_d_sigma(p: MlfParams, x: f64) -> Result<f64> {
    MlfDistribution::new(p)?.d_cdf_d_sigma(x)
}

pub fn d_cdf_d_beta(p: MlfParams, x: f64) -> Result<BetaDerivative> {
    MlfDistribution::new(p)?.d_cdf_d_beta(x)
}

/// `n` i.i.d. variates from the stream seeded with `seed`.
pub fn sample(p: MlfParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParams("sample size must be positive"));
    }
    let dist = MlfDistribution::new(p)?;
    let mut rng = Stream::new(seed);
    let mut out = Vec::with_capacity(n);
    dist.sample_into(&mut rng, &mut out, n);
    Ok(out)
}
