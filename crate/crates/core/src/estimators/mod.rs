//! Estimators of `(β, σ)`: log-moment (LM), maximum likelihood (ML),
//! Cramér–von Mises (CM), quantile least squares (QLS) and quantile-based
//! (QB), each accepting observation weights.
//!
//! All optimizer-based estimators start from the LM estimate. Observations
//! with zero weight are dropped before fitting; none of the objectives (or
//! the weighted empirical quantile) can see them.

use core::fmt;
use core::str::FromStr;
use core::time::Duration;

#[allow(unused_imports)]
use crate::prelude::*;
use crate::dist::{Admissibility, QuantileSet, StandardMlf};
use crate::optim::Diagnostics;
use crate::{Error, MlfParams, Result};

mod cm;
mod lm;
mod ml;
mod quantile;

pub use cm::estimate_cm;
pub use lm::estimate_lm;
pub use ml::estimate_ml;
pub use quantile::{empirical_quantile, estimate_qb, estimate_qls};

use crate::OptimizerConfig;

/// Tolerance on the unit sum of supplied weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Positive observations with optional normalized weights (absent means
/// uniform `1/n`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    values: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl WeightedSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_values(&values)?;
        Ok(Self { values, weights: None })
    }

    pub fn with_weights(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_values(&values)?;
        if weights.len() != values.len() {
            return Err(Error::InvalidParams("values and weights differ in length"));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParams("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParams("weights must sum to one"));
        }
        Ok(Self { values, weights: Some(weights) })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Weight of observation `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.values.len() as f64,
        }
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParams("observations must be positive and finite"));
    }
    Ok(())
}

/// Positive-weight observations sorted ascending, with their weights.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Prepared {
    pub fn new(s: &WeightedSample) -> Self {
        let mut pairs: Vec<(f64, f64)> = (0..s.len())
            .map(|i| (s.values[i], s.weight(i)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (values, weights) = pairs.into_iter().unzip();
        Self { values, weights }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Rejects samples every estimator treats as degenerate.
    pub fn check_estimable(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::Estimation("at least two observations with positive weight are required"));
        }
        if self.values[0] == self.values[self.values.len() - 1] {
            return Err(Error::Estimation("all observations are equal"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    Lm,
    Ml,
    Cm,
    Qls,
    Qb,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Lm, Method::Ml, Method::Cm, Method::Qls, Method::Qb];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lm => "lm",
            Method::Ml => "ml",
            Method::Cm => "cm",
            Method::Qls => "qls",
            Method::Qb => "qb",
        }
    }

    /// Default quantile set of the quantile-based methods.
    pub fn default_quantiles(self) -> Option<QuantileSet> {
        match self {
            Method::Qb => Some(QuantileSet::qb_default()),
            Method::Qls => Some(QuantileSet::qls_default()),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lm" => Ok(Method::Lm),
            "ml" => Ok(Method::Ml),
            "cm" => Ok(Method::Cm),
            "qls" => Ok(Method::Qls),
            "qb" => Ok(Method::Qb),
            _ => Err(Error::InvalidParams("unknown method (expected lm, ml, cm, qls or qb)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub params: MlfParams,
    pub method: Method,
    pub converged: bool,
    /// LM: 0. ML: attained weighted log-likelihood. CM, QLS, QB: attained
    /// objective.
    pub objective_value: f64,
    pub iterations: usize,
    /// Objective evaluations, gradient differences included.
    pub evaluations: usize,
    /// Zero without the `std` feature.
    pub wall_time: Duration,
    /// Quantile levels used by QLS and QB.
    pub quantile_set: Option<QuantileSet>,
    /// QB only; `NotEstablished` is the warning case.
    pub admissibility: Option<Admissibility>,
}

impl EstimateResult {
    /// QB fit with a quantile set not known to identify the parameters.
    pub fn admissibility_warning(&self) -> bool {
        self.admissibility == Some(Admissibility::NotEstablished)
    }

    pub(crate) fn from_optimizer(method: Method, params: MlfParams, d: &Diagnostics, objective_value: f64) -> Self {
        Self {
            params,
            method,
            converged: d.converged && objective_value.is_finite(),
            objective_value,
            iterations: d.iterations,
            evaluations: d.evaluations,
            wall_time: Duration::ZERO,
            quantile_set: None,
            admissibility: None,
        }
    }
}

/// Run `method` on `s`. `qs` defaults per method and is ignored by LM, ML, CM.
pub fn estimate(method: Method, s: &WeightedSample, qs: Option<&QuantileSet>, cfg: &OptimizerConfig) -> Result<EstimateResult> {
    match method {
        Method::Lm => estimate_lm(s),
        Method::Ml => estimate_ml(s, cfg),
        Method::Cm => estimate_cm(s, cfg),
        Method::Qls => match qs {
            Some(q) => estimate_qls(s, q, cfg),
            None => estimate_qls(s, &QuantileSet::qls_default(), cfg),
        },
        Method::Qb => match qs {
            Some(q) => estimate_qb(s, q, cfg),
            None => estimate_qb(s, &QuantileSet::qb_default(), cfg),
        },
    }
}

/// Monotonic clock around an estimator call.
pub(crate) struct Stopwatch {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    pub fn elapsed(&self) -> Duration {
        #[cfg(feature = "std")]
        {
            self.start.elapsed()
        }
        #[cfg(not(feature = "std"))]
        {
            Duration::ZERO
        }
    }
}

/// The unit-scale law of the most recently requested `β`.
pub(crate) struct BetaCache {
    law: Option<StandardMlf>,
}

impl BetaCache {
    pub fn new() -> Self {
        Self { law: None }
    }

    pub fn get(&mut self, beta: f64) -> Result<&StandardMlf> {
        let next = match &self.law {
            Some(law) if law.beta().to_bits() == beta.to_bits() => None,
            Some(law) => Some(law.with_beta(beta)?),
            None => Some(StandardMlf::new(beta)?),
        };
        if let Some(law) = next {
            self.law = Some(law);
        }
        Ok(self.law.as_ref().expect("filled above"))
    }
}
