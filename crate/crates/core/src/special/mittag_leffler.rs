use alloc::sync::Arc;
use core::cell::{OnceCell, RefCell};
use core::f64::consts::PI;

use num_complex::Complex64;

use super::gamma::{digamma_unchecked, ln_gamma, reciprocal_gamma, reciprocal_gamma_derivative};
use super::sum::CompensatedSum;
use super::{MlfEvalConfig, Regime};
#[allow(unused_imports)]
use crate::prelude::*;
use crate::{Error, Result};

/// Convergent series are summed to machine precision; it costs a few terms.
const SERIES_STOP: f64 = 0.5 * f64::EPSILON;

/// Upper bound of `1/Γ(w)` for `w > 0`.
const LN_MAX_RECIP_GAMMA_POSITIVE: f64 = 0.121_486_290_535_648_76; // ln(1/0.885603...)

/// `E_β(x)` with the default accuracy policy.
pub fn mittag_leffler(beta: f64, x: f64) -> Result<f64> {
    mittag_leffler_with(beta, x, &MlfEvalConfig::default())
}

/// `E_β(x)` under an explicit accuracy policy.
pub fn mittag_leffler_with(beta: f64, x: f64, cfg: &MlfEvalConfig) -> Result<f64> {
    mittag_leffler_two_param_with(beta, 1.0, x, cfg)
}

/// `E_{β,ρ}(x) = Σ_k x^k / Γ(ρ + βk)` with the default accuracy policy.
pub fn mittag_leffler_two_param(beta: f64, rho: f64, x: f64) -> Result<f64> {
    mittag_leffler_two_param_with(beta, rho, x, &MlfEvalConfig::default())
}

/// `E_{β,ρ}(x)` under an explicit accuracy policy.
pub fn mittag_leffler_two_param_with(beta: f64, rho: f64, x: f64, cfg: &MlfEvalConfig) -> Result<f64> {
    cfg.validate()?;
    check_beta(beta)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain("rho must be positive and finite"));
    }
    if !x.is_finite() {
        return Err(Error::Domain("argument must be finite"));
    }
    if beta == 1.0 && rho == 1.0 {
        return Ok(x.exp());
    }
    if x > 0.0 {
        return positive_series(beta, rho, x, cfg);
    }
    let tau = -x;
    let ml = MittagLeffler::new(beta, *cfg)?;
    if rho == 1.0 {
        ml.e(tau)
    } else if rho == beta {
        ml.e_beta_beta(tau)
    } else {
        ml.e_general(rho, tau)
    }
}

/// Initial coefficient table size; covers the series up to the default
/// cutoff without regrowing.
const SERIES_CAPACITY: usize = 64;
const ASYMPTOTIC_CAPACITY: usize = 16;

/// Term budget used to lower the series cutoff.
const SERIES_BUDGET: usize = 500;

/// `min(cutoff, τ*)` where the `B`-th term `τ*^B / Γ(1 + βB)` of the series
/// reaches the stopping threshold, `B = min(max_terms, 500)`.
fn series_limit(beta: f64, cfg: &MlfEvalConfig) -> f64 {
    let b = cfg.max_terms.min(SERIES_BUDGET) as f64;
    let ln_tau = (SERIES_STOP.ln() + ln_gamma(1.0 + beta * b)) / b;
    cfg.series_cutoff.min(ln_tau.exp())
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain("beta must lie in (0, 1]"))
    }
}

/// Power series for positive arguments; all terms are positive.
fn positive_series(beta: f64, rho: f64, x: f64, cfg: &MlfEvalConfig) -> Result<f64> {
    let lnx = x.ln();
    let mut acc = CompensatedSum::new();
    let mut prev = f64::INFINITY;
    for k in 0..cfg.max_terms {
        let kf = k as f64;
        let arg = rho + beta * kf;
        let term = (kf * lnx - ln_gamma(arg)).exp();
        acc.add(term);
        let s = acc.value();
        if k > 0 && term <= prev && term <= SERIES_STOP * s {
            return Ok(s);
        }
        prev = term;
    }
    Err(Error::Evaluation { regime: Regime::Series, partial: acc.value() })
}

/// Quadrature nodes of the parabolic contour `s(u) = μ(1 + iu)²`.
#[derive(Debug, Clone)]
struct ContourNodes {
    s: Vec<Complex64>,
    ln_s: Vec<Complex64>,
    /// Trapezoid weight `c_j h e^{s_j} s'(u_j) / (2πi)`, `c_0 = 1`, `c_j = 2`.
    weight: Vec<Complex64>,
    /// `weight_j / s_j`.
    weight_over_s: Vec<Complex64>,
}

impl ContourNodes {
    fn new(tol: f64) -> Self {
        // discretisation and truncation errors both scale as exp(−2πN/3)
        let n = ((3.0 / (2.0 * PI)) * ((1.0 / tol).ln() + 12.0)).ceil().clamp(8.0, 40.0) as usize;
        let mu = PI * n as f64 / 12.0;
        let h = 3.0 / n as f64;
        let mut nodes = ContourNodes {
            s: Vec::with_capacity(n + 1),
            ln_s: Vec::with_capacity(n + 1),
            weight: Vec::with_capacity(n + 1),
            weight_over_s: Vec::with_capacity(n + 1),
        };
        for j in 0..=n {
            let u = j as f64 * h;
            let one_iu = Complex64::new(1.0, u);
            let s = one_iu * one_iu * mu;
            let factor = if j == 0 { 1.0 } else { 2.0 };
            // s'(u) / (2πi) = μ(1 + iu)/π
            let w = s.exp() * one_iu * (factor * h * mu / PI);
            nodes.s.push(s);
            nodes.ln_s.push(s.ln());
            nodes.weight.push(w);
            nodes.weight_over_s.push(w / s);
        }
        nodes
    }

    fn len(&self) -> usize {
        self.s.len()
    }
}

#[derive(Debug, Clone)]
struct ContourTable {
    nodes: Arc<ContourNodes>,
    /// `s_j^β`.
    s_pow_beta: Vec<Complex64>,
}

/// Coefficient rows of the large-argument expansion, grown on demand.
#[derive(Debug, Clone, Copy)]
enum Row {
    /// `1/Γ(1 − βk)`.
    Unit,
    /// `d/dw [1/Γ(w)]` at `w = 1 − βk`.
    UnitDerivative,
    /// `1/Γ(β − βk)`.
    Same,
}

/// Entries `(coefficient, ln of an upper bound of its magnitude)` by `k`.
type LazyRow = RefCell<Vec<(f64, f64)>>;

fn recip_gamma_log_bound(w: f64) -> f64 {
    if w > 0.0 {
        LN_MAX_RECIP_GAMMA_POSITIVE
    } else {
        // |1/Γ(w)| = Γ(1 − w)|sin πw|/π
        ln_gamma(1.0 - w) - PI.ln()
    }
}

/// Mittag-Leffler functions `E_β(−τ)` and `E_{β,β}(−τ)` for one fixed `β`.
///
/// Coefficient tables are built lazily on first use and reused across
/// arguments, so one evaluator should be kept per `β` when evaluating many
/// points. The evaluator is not `Sync`; use one per thread.
#[derive(Debug, Clone)]
pub struct MittagLeffler {
    beta: f64,
    cfg: MlfEvalConfig,
    /// Largest `τ` summed by the series: the configured cutoff, lowered for
    /// small `β` where the terms decay too slowly near `τ = 1`.
    series_limit: f64,
    /// `1/Γ(1 + βk)`, grown on demand.
    series: RefCell<Vec<f64>>,
    /// `ψ(1 + βk)`, grown on demand.
    series_digamma: RefCell<Vec<f64>>,
    contour: OnceCell<ContourTable>,
    /// `β`-independent nodes, shared between evaluators made by `with_beta`.
    nodes: OnceCell<Arc<ContourNodes>>,
    asymptotic_unit: LazyRow,
    asymptotic_unit_derivative: LazyRow,
    asymptotic_same: LazyRow,
}

enum Flavor {
    /// `E_β`.
    Unit,
    /// `1 − E_β`.
    Complement,
    /// `E_{β,β}`.
    Same,
}

impl MittagLeffler {
    pub fn new(beta: f64, cfg: MlfEvalConfig) -> Result<Self> {
        check_beta(beta)?;
        cfg.validate()?;
        Ok(Self {
            beta,
            cfg,
            series_limit: series_limit(beta, &cfg),
            series: RefCell::new(Vec::with_capacity(SERIES_CAPACITY)),
            series_digamma: RefCell::new(Vec::with_capacity(SERIES_CAPACITY)),
            contour: OnceCell::new(),
            nodes: OnceCell::new(),
            asymptotic_unit: RefCell::new(Vec::with_capacity(ASYMPTOTIC_CAPACITY)),
            asymptotic_unit_derivative: RefCell::new(Vec::with_capacity(ASYMPTOTIC_CAPACITY)),
            asymptotic_same: RefCell::new(Vec::with_capacity(ASYMPTOTIC_CAPACITY)),
        })
    }

    /// Evaluator for another `β` under the same configuration, reusing the
    /// `β`-independent contour nodes.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        let next = Self::new(beta, self.cfg)?;
        if let Some(nodes) = self.nodes.get() {
            let _ = next.nodes.set(Arc::clone(nodes));
        }
        Ok(next)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn config(&self) -> &MlfEvalConfig {
        &self.cfg
    }

    /// Regime used for `E_β(−τ)`.
    pub fn regime(&self, tau: f64) -> Regime {
        if self.beta == 1.0 {
            Regime::Exact
        } else if tau <= self.series_limit {
            Regime::Series
        } else if self.asymptotic_admissible(tau, self.unit_lead(tau)) {
            Regime::Asymptotic
        } else {
            Regime::Contour
        }
    }

    /// `E_β(−τ)` for `τ ≥ 0`.
    pub fn e(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        if self.beta == 1.0 {
            return Ok((-tau).exp());
        }
        if tau == f64::INFINITY {
            return Ok(0.0);
        }
        self.dispatch(tau, Flavor::Unit)
    }

    /// `1 − E_β(−τ)` without cancellation for small `τ`.
    pub fn one_minus_e(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        if self.beta == 1.0 {
            return Ok(-(-tau).exp_m1());
        }
        if tau == f64::INFINITY {
            return Ok(1.0);
        }
        self.dispatch(tau, Flavor::Complement)
    }

    /// `E_{β,β}(−τ)` for `τ ≥ 0`.
    pub fn e_beta_beta(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        if self.beta == 1.0 {
            return Ok((-tau).exp());
        }
        if tau == f64::INFINITY {
            return Ok(0.0);
        }
        self.dispatch(tau, Flavor::Same)
    }

    /// `ln E_{β,β}(−τ)`, finite far beyond the underflow point of the value.
    pub fn ln_e_beta_beta(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        if self.beta == 1.0 {
            return Ok(-tau);
        }
        if tau > self.series_limit && self.asymptotic_admissible(tau, self.same_lead(tau)) {
            if let Some(scaled) = self.asymptotic_scaled(tau, Flavor::Same) {
                // value = scaled · τ^{-2}
                return Ok(scaled.ln() - 2.0 * tau.ln());
            }
        }
        Ok(self.e_beta_beta(tau)?.ln())
    }

    /// `∂/∂β E_β(−z^β)` at fixed `z > 0`.
    pub fn d_dbeta_at_power(&self, z: f64) -> Result<(f64, Regime)> {
        if z.is_nan() || z <= 0.0 || !z.is_finite() {
            return Err(Error::Domain("derivative requires a finite positive argument"));
        }
        let beta = self.beta;
        let ln_z = z.ln();
        let tau = (beta * ln_z).exp();
        if tau <= self.series_limit {
            return self.series_derivative(tau, ln_z).map(|v| (v, Regime::Series));
        }
        let lead = (ln_z * self.coef(Row::Unit, 1).0 + self.coef(Row::UnitDerivative, 1).0).abs().ln() - tau.ln();
        if self.asymptotic_admissible(tau, lead) {
            if let Some(v) = self.asymptotic_derivative(tau, ln_z) {
                return Ok((v, Regime::Asymptotic));
            }
        }
        Ok((self.contour_derivative(tau, ln_z), Regime::Contour))
    }

    fn dispatch(&self, tau: f64, flavor: Flavor) -> Result<f64> {
        if tau <= self.series_limit {
            return self.series_value(tau, flavor);
        }
        let lead = match flavor {
            Flavor::Same => self.same_lead(tau),
            _ => self.unit_lead(tau),
        };
        if self.asymptotic_admissible(tau, lead) {
            let scaled = match flavor {
                Flavor::Same => self.asymptotic_scaled(tau, Flavor::Same),
                _ => self.asymptotic_scaled(tau, Flavor::Unit),
            };
            if let Some(scaled) = scaled {
                return Ok(match flavor {
                    Flavor::Unit => scaled / tau,
                    Flavor::Complement => 1.0 - scaled / tau,
                    Flavor::Same => scaled / (tau * tau),
                });
            }
        }
        Ok(self.contour_value(tau, flavor))
    }

    // ---- power series ----

    fn series_value(&self, tau: f64, flavor: Flavor) -> Result<f64> {
        let mut c = self.series.borrow_mut();
        let beta = self.beta;
        let start = match flavor {
            Flavor::Complement => 1,
            _ => 0,
        };
        let mut acc = CompensatedSum::new();
        let mut power = if start == 0 { 1.0 } else { -tau };
        let mut prev = f64::INFINITY;
        for k in start..self.cfg.max_terms {
            grow_series(beta, &mut c, k + 1);
            let coef = match flavor {
                Flavor::Same => beta * (k + 1) as f64 * c[k + 1],
                _ => c[k],
            };
            let term = power * coef;
            acc.add(term);
            let mag = term.abs();
            if tau == 0.0 || (k > start && mag <= prev && mag <= SERIES_STOP * acc.value().abs()) {
                let s = acc.value();
                return Ok(match flavor {
                    Flavor::Complement => -s,
                    _ => s,
                });
            }
            if !mag.is_finite() {
                break;
            }
            prev = mag;
            power *= -tau;
        }
        Err(Error::Evaluation { regime: Regime::Series, partial: acc.value() })
    }

    fn series_derivative(&self, tau: f64, ln_z: f64) -> Result<f64> {
        if tau == 0.0 {
            return Ok(0.0);
        }
        let mut c = self.series.borrow_mut();
        let mut psi = self.series_digamma.borrow_mut();
        let mut acc = CompensatedSum::new();
        let mut power = -tau;
        let mut prev = f64::INFINITY;
        for k in 1..self.cfg.max_terms {
            grow_series(self.beta, &mut c, k);
            while psi.len() <= k {
                let j = psi.len() as f64;
                psi.push(digamma_unchecked(1.0 + self.beta * j));
            }
            let term = power * k as f64 * (ln_z - psi[k]) * c[k];
            acc.add(term);
            let bound = (power * k as f64 * c[k]).abs() * (ln_z.abs() + psi[k].abs());
            if k > 2 && bound <= prev && bound <= SERIES_STOP * acc.value().abs() {
                return Ok(acc.value());
            }
            if !bound.is_finite() {
                break;
            }
            prev = bound;
            power *= -tau;
        }
        Err(Error::Evaluation { regime: Regime::Series, partial: acc.value() })
    }

    // ---- large-argument expansion ----

    fn coef(&self, row: Row, k: usize) -> (f64, f64) {
        let cell = match row {
            Row::Unit => &self.asymptotic_unit,
            Row::UnitDerivative => &self.asymptotic_unit_derivative,
            Row::Same => &self.asymptotic_same,
        };
        let mut v = cell.borrow_mut();
        while v.len() <= k {
            let j = v.len() as f64;
            let entry = match row {
                Row::Unit => {
                    let w = 1.0 - self.beta * j;
                    (reciprocal_gamma(w), recip_gamma_log_bound(w))
                }
                Row::UnitDerivative => (reciprocal_gamma_derivative(1.0 - self.beta * j), 0.0),
                Row::Same => {
                    let w = self.beta - self.beta * j;
                    (reciprocal_gamma(w), recip_gamma_log_bound(w))
                }
            };
            v.push(entry);
        }
        v[k]
    }

    /// ln of the leading term of the expansion of `E_β(−τ)`.
    fn unit_lead(&self, tau: f64) -> f64 {
        self.coef(Row::Unit, 1).0.abs().ln() - tau.ln()
    }

    /// ln of the leading term of the expansion of `E_{β,β}(−τ)`.
    fn same_lead(&self, tau: f64) -> f64 {
        self.coef(Row::Same, 2).0.abs().ln() - 2.0 * tau.ln()
    }

    /// The exponentially small remainder `~e^{-z}`, `z = τ^{1/β}`, must sit
    /// well below the tolerance relative to the leading term.
    fn asymptotic_admissible(&self, tau: f64, ln_lead: f64) -> bool {
        if ln_lead.is_nan() || ln_lead == f64::NEG_INFINITY {
            return false;
        }
        let ln_z = tau.ln() / self.beta;
        let needed = -self.cfg.target_rel_tol.ln() + 7.0 - ln_lead;
        ln_z > 700.0 || ln_z.exp() >= needed
    }

    /// Expansion scaled by `τ` (unit) or `τ²` (same); `None` if it starts to
    /// diverge before reaching the tolerance.
    fn asymptotic_scaled(&self, tau: f64, flavor: Flavor) -> Option<f64> {
        let (row, k0) = match flavor {
            Flavor::Same => (Row::Same, 2usize),
            _ => (Row::Unit, 1usize),
        };
        let ln_tau = tau.ln();
        let ln_tol = (0.1 * self.cfg.target_rel_tol).ln();
        let inv = 1.0 / tau;
        let mut acc = CompensatedSum::new();
        let mut power = 1.0;
        let mut prev_bound = f64::INFINITY;
        for k in k0..self.cfg.max_terms {
            let (coef, log_bound) = self.coef(row, k);
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc.add(sign * power * coef);
            let bound = log_bound - (k - k0) as f64 * ln_tau;
            let s = acc.value();
            if k > k0 && bound < ln_tol + s.abs().ln() {
                return Some(s);
            }
            if k > k0 + 1 && bound > prev_bound {
                return None;
            }
            prev_bound = bound;
            power *= inv;
        }
        None
    }

    fn asymptotic_derivative(&self, tau: f64, ln_z: f64) -> Option<f64> {
        let ln_tau = tau.ln();
        let ln_tol = (0.1 * self.cfg.target_rel_tol).ln();
        let inv = 1.0 / tau;
        let mut acc = CompensatedSum::new();
        let mut power = inv;
        let mut prev_bound = f64::INFINITY;
        for k in 1..self.cfg.max_terms {
            let kf = k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let (unit, unit_log_bound) = self.coef(Row::Unit, k);
            let unit_derivative = self.coef(Row::UnitDerivative, k).0;
            acc.add(sign * kf * power * (ln_z * unit + unit_derivative));
            let w = 1.0 - self.beta * kf;
            let psi_scale = ln_z.abs() + (2.0 + w.abs()).ln() + PI;
            let bound = unit_log_bound.max(0.0) + (kf * psi_scale).ln() - kf * ln_tau;
            let s = acc.value();
            if k > 1 && bound < ln_tol + s.abs().ln() {
                return Some(s);
            }
            if k > 2 && bound > prev_bound {
                return None;
            }
            prev_bound = bound;
            power *= inv;
        }
        None
    }

    // ---- contour integral ----

    fn contour_table(&self) -> &ContourTable {
        self.contour.get_or_init(|| {
            let nodes = Arc::clone(self.nodes.get_or_init(|| Arc::new(ContourNodes::new(self.cfg.target_rel_tol))));
            let s_pow_beta = nodes.ln_s.iter().map(|l| (l * self.beta).exp()).collect();
            ContourTable { nodes, s_pow_beta }
        })
    }

    fn contour_value(&self, tau: f64, flavor: Flavor) -> f64 {
        let t = self.contour_table();
        let mut acc = CompensatedSum::new();
        for j in 0..t.nodes.len() {
            let p = t.s_pow_beta[j];
            let denom = p + tau;
            let v = match flavor {
                Flavor::Unit => t.nodes.weight_over_s[j] * p / denom,
                Flavor::Complement => t.nodes.weight_over_s[j] * tau / denom,
                Flavor::Same => t.nodes.weight[j] / denom,
            };
            acc.add(v.re);
        }
        acc.value()
    }

    fn contour_derivative(&self, tau: f64, ln_z: f64) -> f64 {
        let t = self.contour_table();
        let mut acc = CompensatedSum::new();
        for j in 0..t.nodes.len() {
            let p = t.s_pow_beta[j];
            let denom = p + tau;
            let v = t.nodes.weight_over_s[j] * p * tau * (t.nodes.ln_s[j] - ln_z) / (denom * denom);
            acc.add(v.re);
        }
        acc.value()
    }

    /// `E_{β,ρ}(−τ)` for arbitrary `ρ > 0`, without cached coefficients.
    fn e_general(&self, rho: f64, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        let beta = self.beta;
        let tol = 0.1 * self.cfg.target_rel_tol;
        if tau <= self.series_limit {
            let mut acc = CompensatedSum::new();
            let mut power = 1.0;
            let mut prev = f64::INFINITY;
            for k in 0..self.cfg.max_terms {
                let term = power * reciprocal_gamma(rho + beta * k as f64);
                acc.add(term);
                let mag = term.abs();
                if tau == 0.0 || (k > 0 && mag <= prev && mag <= tol * acc.value().abs()) {
                    return Ok(acc.value());
                }
                prev = mag;
                power *= -tau;
            }
            return Err(Error::Evaluation { regime: Regime::Series, partial: acc.value() });
        }
        let first = (1..4)
            .map(|k| reciprocal_gamma(rho - beta * k as f64).abs().ln() - k as f64 * tau.ln())
            .fold(f64::NEG_INFINITY, f64::max);
        if self.asymptotic_admissible(tau, first) {
            let ln_tau = tau.ln();
            let mut acc = CompensatedSum::new();
            let mut prev_bound = f64::INFINITY;
            for k in 1..self.cfg.max_terms {
                let w = rho - beta * k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                acc.add(sign * reciprocal_gamma(w) * (-(k as f64) * ln_tau).exp());
                let bound = recip_gamma_log_bound(w) - k as f64 * ln_tau;
                let s = acc.value();
                if s != 0.0 && bound < tol.ln() + s.abs().ln() {
                    return Ok(s);
                }
                if k > 3 && bound > prev_bound {
                    break;
                }
                prev_bound = bound;
            }
        }
        let t = self.contour_table();
        let mut acc = CompensatedSum::new();
        for j in 0..t.nodes.len() {
            let q = (t.nodes.ln_s[j] * (beta - rho)).exp();
            acc.add((t.nodes.weight[j] * q / (t.s_pow_beta[j] + tau)).re);
        }
        Ok(acc.value())
    }
}

/// Extends `1/Γ(1 + βk)` through index `k`.
#[inline]
fn grow_series(beta: f64, c: &mut Vec<f64>, k: usize) {
    while c.len() <= k {
        let j = c.len();
        c.push(if j == 0 { 1.0 } else { reciprocal_gamma(1.0 + beta * j as f64) });
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain("argument magnitude must be non-negative"))
    }
}
