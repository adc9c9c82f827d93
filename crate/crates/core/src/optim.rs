//! Bound-constrained quasi-Newton minimisation over `(β, σ)`.
//!
//! The search runs in `(β, ln σ)` on the box `[β_lo, β_hi] × [ln σ_lo, ∞)`.
//! Each iteration takes a projected BFGS step on the free variables (a
//! variable is held when it sits on a bound and the gradient pushes outward),
//! followed by a projected Armijo backtracking search. Gradients are central
//! differences with absolute step `1e-7` in both coordinates, one-sided at a
//! bound (an absolute step in `ln σ` is a relative step in `σ`), unless the
//! objective supplies an analytic gradient through [`Objective`].

#[allow(unused_imports)]
use crate::prelude::*;
use crate::{Error, MlfParams, Result};

const FD_STEP: f64 = 1e-7;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// Largest step in either coordinate.
const MAX_STEP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizerConfig {
    /// `(lo, hi]` with `0 < lo < hi ≤ 1`; `β = lo` is treated as attainable.
    pub beta_bounds: (f64, f64),
    pub sigma_lower: f64,
    /// Bound on the max-norm of the projected gradient in `(β, ln σ)`.
    pub grad_tol: f64,
    /// Bound on the max-norm of an accepted step in `(β, ln σ)`.
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { beta_bounds: (1e-4, 1.0), sigma_lower: 1e-12, grad_tol: 1e-8, step_tol: 1e-10, max_iter: 500 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.beta_bounds;
        if !(lo > 0.0 && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidParams("beta bounds must satisfy 0 < lo < hi <= 1"));
        }
        if !(self.sigma_lower > 0.0 && self.sigma_lower.is_finite()) {
            return Err(Error::InvalidParams("sigma_lower must be positive"));
        }
        if !(self.grad_tol > 0.0 && self.step_tol > 0.0) {
            return Err(Error::InvalidParams("tolerances must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be positive"));
        }
        Ok(())
    }

    /// Clamp a point into the feasible box.
    pub fn project(&self, p: MlfParams) -> MlfParams {
        MlfParams {
            beta: p.beta.clamp(self.beta_bounds.0, self.beta_bounds.1),
            sigma: p.sigma.max(self.sigma_lower),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub evaluations: usize,
    pub objective: f64,
    pub projected_gradient_norm: f64,
}

/// A function of `(β, σ)` to minimise.
pub trait Objective {
    fn value(&mut self, p: MlfParams) -> f64;

    /// `[∂f/∂β, ∂f/∂σ]` at `p`. `None` (the default) or a non-finite entry
    /// selects finite differences.
    fn gradient(&mut self, _p: MlfParams) -> Option<[f64; 2]> {
        None
    }

    /// A positive definite approximation of the Hessian in `(β, σ)` at `p`
    /// (for example Gauss–Newton), used to seed the quasi-Newton matrix at
    /// the start and after a reset. Called right after `gradient(p)`.
    fn curvature(&mut self, _p: MlfParams) -> Option<[[f64; 2]; 2]> {
        None
    }
}

/// Adapts a closure; its gradient is always taken by finite differences.
struct Plain<F>(F);

impl<F: FnMut(MlfParams) -> f64> Objective for Plain<F> {
    fn value(&mut self, p: MlfParams) -> f64 {
        (self.0)(p)
    }
}

struct Problem<'a, O: ?Sized> {
    f: &'a mut O,
    lo: [f64; 2],
    hi: [f64; 2],
    evaluations: usize,
}

fn params(x: [f64; 2]) -> MlfParams {
    MlfParams { beta: x[0], sigma: x[1].exp() }
}

impl<O: Objective + ?Sized> Problem<'_, O> {
    fn eval(&mut self, x: [f64; 2]) -> f64 {
        self.evaluations += 1;
        let v = self.f.value(params(x));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn project(&self, x: [f64; 2]) -> [f64; 2] {
        [x[0].clamp(self.lo[0], self.hi[0]), x[1].clamp(self.lo[1], self.hi[1])]
    }

    fn gradient(&mut self, x: [f64; 2], fx: f64) -> [f64; 2] {
        let p = params(x);
        if let Some([d_beta, d_sigma]) = self.f.gradient(p) {
            // chain rule into ln σ
            let g = [d_beta, d_sigma * p.sigma];
            if g[0].is_finite() && g[1].is_finite() {
                return g;
            }
        }
        let mut g = [0.0; 2];
        for i in 0..2 {
            let mut up = x;
            let mut down = x;
            let can_up = x[i] + FD_STEP <= self.hi[i];
            let can_down = x[i] - FD_STEP >= self.lo[i];
            g[i] = if can_up && can_down {
                up[i] += FD_STEP;
                down[i] -= FD_STEP;
                (self.eval(up) - self.eval(down)) / (2.0 * FD_STEP)
            } else if can_up {
                up[i] += FD_STEP;
                (self.eval(up) - fx) / FD_STEP
            } else {
                down[i] -= FD_STEP;
                (fx - self.eval(down)) / FD_STEP
            };
        }
        g
    }

    /// Inverse of the objective's curvature hint in `(β, ln σ)`.
    fn seed_inverse(&mut self, x: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        let p = params(x);
        let b = self.f.curvature(p)?;
        // d/d ln σ = σ d/dσ; the first-order term of the chain rule is dropped
        let s = p.sigma;
        let b = [[b[0][0], b[0][1] * s], [b[1][0] * s, b[1][1] * s * s]];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        if !(b[0][0] > 0.0 && b[1][1] > 0.0 && det > 1e-12 * b[0][0] * b[1][1] && det.is_finite()) {
            return None;
        }
        Some([[b[1][1] / det, -b[0][1] / det], [-b[1][0] / det, b[0][0] / det]])
    }

    /// Variables held on a bound because the gradient points outward.
    fn held(&self, x: [f64; 2], g: [f64; 2]) -> [bool; 2] {
        let mut held = [false; 2];
        for i in 0..2 {
            held[i] = (x[i] <= self.lo[i] && g[i] > 0.0) || (x[i] >= self.hi[i] && g[i] < 0.0);
        }
        held
    }
}

fn max_norm(v: [f64; 2]) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// Minimise `objective` over the box defined by `cfg`, starting from the
/// projection of `start`.
///
/// Returns the best point and diagnostics; hitting `max_iter` is reported
/// through `Diagnostics::converged = false`, not as an error.
pub fn minimize_bounded<F>(objective: F, start: MlfParams, cfg: &OptimizerConfig) -> Result<(MlfParams, Diagnostics)>
where
    F: FnMut(MlfParams) -> f64,
{
    minimize_objective(&mut Plain(objective), start, cfg)
}

/// [`minimize_bounded`] for an [`Objective`], using its analytic gradient
/// where available. `Diagnostics::evaluations` counts value calls only.
pub fn minimize_objective<O>(objective: &mut O, start: MlfParams, cfg: &OptimizerConfig) -> Result<(MlfParams, Diagnostics)>
where
    O: Objective + ?Sized,
{
    cfg.validate()?;
    if !(start.beta.is_finite() && start.sigma > 0.0 && start.sigma.is_finite()) {
        return Err(Error::Optimizer("start point must be finite with positive sigma"));
    }
    let mut pb = Problem {
        f: objective,
        lo: [cfg.beta_bounds.0, cfg.sigma_lower.ln()],
        hi: [cfg.beta_bounds.1, f64::INFINITY],
        evaluations: 0,
    };
    let mut x = pb.project([start.beta, start.sigma.ln()]);
    let mut fx = pb.eval(x);
    if !fx.is_finite() {
        return Err(Error::Optimizer("objective is not finite at the start point"));
    }
    let mut g = pb.gradient(x, fx);
    // inverse Hessian approximation
    let mut h = [[1.0, 0.0], [0.0, 1.0]];
    let mut scaled = false;
    if let Some(seed) = pb.seed_inverse(x) {
        h = seed;
        scaled = true;
    }
    let mut termination = Termination::MaxIterations;
    let mut pg_norm = f64::INFINITY;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        let held = pb.held(x, g);
        let pg = [if held[0] { 0.0 } else { g[0] }, if held[1] { 0.0 } else { g[1] }];
        pg_norm = max_norm(pg);
        if pg_norm <= cfg.grad_tol {
            termination = Termination::GradientTolerance;
            break;
        }
        iterations += 1;

        let mut d = match held {
            [false, false] => [-(h[0][0] * g[0] + h[0][1] * g[1]), -(h[1][0] * g[0] + h[1][1] * g[1])],
            [true, false] => [0.0, -g[1] / inverse_diag(&h, 1)],
            [false, true] => [-g[0] / inverse_diag(&h, 0), 0.0],
            [true, true] => [0.0, 0.0],
        };
        if d[0] * pg[0] + d[1] * pg[1] >= 0.0 {
            h = [[1.0, 0.0], [0.0, 1.0]];
            scaled = false;
            if let Some(seed) = pb.seed_inverse(x) {
                h = seed;
                scaled = true;
            }
            d = [-pg[0], -pg[1]];
        }
        let dn = max_norm(d);
        if dn > MAX_STEP {
            d = [d[0] * MAX_STEP / dn, d[1] * MAX_STEP / dn];
        }

        // projected Armijo backtracking
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = pb.project([x[0] + alpha * d[0], x[1] + alpha * d[1]]);
            let s = [trial[0] - x[0], trial[1] - x[1]];
            if max_norm(s) == 0.0 {
                break;
            }
            let ft = pb.eval(trial);
            if ft <= fx + ARMIJO * (g[0] * s[0] + g[1] * s[1]) {
                accepted = Some((trial, ft, s));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new, s)) = accepted else {
            termination = Termination::StepTolerance;
            break;
        };
        let g_new = pb.gradient(x_new, f_new);
        let y = [g_new[0] - g[0], g_new[1] - g[1]];
        x = x_new;
        fx = f_new;
        g = g_new;
        if max_norm(s) <= cfg.step_tol {
            termination = Termination::StepTolerance;
            break;
        }

        let sy = s[0] * y[0] + s[1] * y[1];
        let yy = y[0] * y[0] + y[1] * y[1];
        let ss = s[0] * s[0] + s[1] * s[1];
        if sy > 1e-12 * (ss * yy).sqrt() {
            if !scaled {
                // Shanno–Phua initial scaling
                let gamma = sy / yy;
                h = [[gamma, 0.0], [0.0, gamma]];
                scaled = true;
            }
            bfgs_inverse_update(&mut h, s, y, sy);
        }
    }

    if termination == Termination::MaxIterations || termination == Termination::StepTolerance {
        let held = pb.held(x, g);
        pg_norm = max_norm([if held[0] { 0.0 } else { g[0] }, if held[1] { 0.0 } else { g[1] }]);
    }
    let best = params(x);
    Ok((
        best,
        Diagnostics {
            converged: termination != Termination::MaxIterations,
            termination,
            iterations,
            evaluations: pb.evaluations,
            objective: fx,
            projected_gradient_norm: pg_norm,
        },
    ))
}

/// Diagonal entry `B_ii` of the Hessian approximation `B = H^{-1}`; the
/// reduced Newton step when only variable `i` is free is `−g_i / B_ii`.
fn inverse_diag(h: &[[f64; 2]; 2], i: usize) -> f64 {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let b_ii = if i == 0 { h[1][1] / det } else { h[0][0] / det };
    if b_ii > 0.0 && b_ii.is_finite() {
        b_ii
    } else {
        1.0
    }
}

fn bfgs_inverse_update(h: &mut [[f64; 2]; 2], s: [f64; 2], y: [f64; 2], sy: f64) {
    let rho = 1.0 / sy;
    let hy = [h[0][0] * y[0] + h[0][1] * y[1], h[1][0] * y[0] + h[1][1] * y[1]];
    let yhy = y[0] * hy[0] + y[1] * hy[1];
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
