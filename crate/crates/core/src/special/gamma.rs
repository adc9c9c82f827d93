//! Gamma-family functions.
//!
//! `gamma` and `ln_gamma` delegate to `libm` (musl's implementations);
//! digamma and the reciprocal gamma function are implemented here. On
//! `[1, 32]` the reciprocal gamma function uses its own Taylor polynomial:
//! the series coefficients `1/Γ(1 + βk)` are rebuilt for every `β` an
//! optimizer visits, and musl's `tgamma` dominated that cost.

use core::f64::consts::PI;

#[allow(unused_imports)]
use crate::prelude::*;
use crate::{Error, Result};

/// Euler–Mascheroni constant γ = −ψ(1).
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// π²/6, the variance of a standard Gumbel variable (= ψ'(1)).
pub const PI_SQUARED_OVER_SIX: f64 = PI * PI / 6.0;

/// Γ(x).
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// ln |Γ(x)|.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// sin(πx) with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    // reduce to r in [0, 2)
    let mut r = x - 2.0 * (x * 0.5).floor();
    let mut sign = 1.0;
    if r >= 1.0 {
        r -= 1.0;
        sign = -1.0;
    }
    if r == 0.0 {
        return 0.0;
    }
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (PI * r).sin()
}

/// Taylor coefficients of 1/Γ(1 + t) about t = 0; the tail beyond degree
/// 28 is below 1e-19 on [0, 1].
const RECIP_GAMMA_TAYLOR: [f64; 29] = [
    1.0,
    0.5772156649015329,
    -0.6558780715202539,
    -0.04200263503409524,
    0.16653861138229148,
    -0.04219773455554433,
    -0.009621971527876973,
    0.0072189432466631,
    -0.0011651675918590652,
    -0.00021524167411495098,
    0.0001280502823881162,
    -2.013485478078824e-05,
    -1.2504934821426706e-06,
    1.133027231981696e-06,
    -2.056338416977607e-07,
    6.116095104481416e-09,
    5.002007644469223e-09,
    -1.18127457048702e-09,
    1.0434267116911005e-10,
    7.782263439905071e-12,
    -3.696805618642206e-12,
    5.100370287454476e-13,
    -2.0583260535665066e-14,
    -5.348122539423018e-15,
    1.2267786282382608e-15,
    -1.1812593016974588e-16,
    1.1866922547516004e-18,
    1.4123806553180319e-18,
    -2.29874568443537e-19,
];

/// 1/Γ(1 + t) for `t ∈ [0, 1)`.
fn reciprocal_gamma_one_two(t: f64) -> f64 {
    RECIP_GAMMA_TAYLOR.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// 1/Γ(z), an entire function: zero at z = 0, −1, −2, …
pub fn reciprocal_gamma(z: f64) -> f64 {
    if (1.0..=32.0).contains(&z) {
        // Γ(z) = (z − 1)(z − 2)⋯(z − m) Γ(z − m) with z − m ∈ [1, 2)
        let mut x = z;
        let mut product = 1.0;
        while x >= 2.0 {
            x -= 1.0;
            product *= x;
        }
        return reciprocal_gamma_one_two(x - 1.0) / product;
    }
    if z > 0.0 && z < 1.0 {
        // 1/Γ(z) = z/Γ(1 + z)
        return z * reciprocal_gamma_one_two(z);
    }
    if z > 0.0 {
        if z > 171.0 {
            return 0.0;
        }
        return 1.0 / gamma(z);
    }
    if z == z.floor() {
        return 0.0;
    }
    // reflection: 1/Γ(z) = Γ(1−z) sin(πz) / π
    let w = 1.0 - z;
    if w <= 32.0 {
        sin_pi(z) / (PI * reciprocal_gamma(w))
    } else if w < 170.0 {
        gamma(w) * sin_pi(z) / PI
    } else {
        (ln_gamma(w)).exp() * sin_pi(z) / PI
    }
}

/// d/dz [1/Γ(z)] = −ψ(z)/Γ(z), continued through the poles of ψ.
pub fn reciprocal_gamma_derivative(z: f64) -> f64 {
    if z <= 0.0 && z == z.floor() {
        // at z = −m the derivative is (−1)^m m!
        let m = -z;
        let sign = if (m as u64).is_multiple_of(2) { 1.0 } else { -1.0 };
        return sign * gamma(m + 1.0);
    }
    let psi = if z > 0.0 {
        digamma_unchecked(z)
    } else {
        // reflection: ψ(z) = ψ(1−z) − π cot(πz)
        digamma_unchecked(1.0 - z) - PI * cos_pi(z) / sin_pi(z)
    };
    -psi * reciprocal_gamma(z)
}

fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

/// Digamma function ψ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain("digamma requires a finite positive argument"));
    }
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    // asymptotic series with Bernoulli numbers B_2 .. B_14
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    shift + x.ln() - 0.5 * inv - tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn digamma_at_one_is_minus_euler_gamma() {
        assert_relative_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, max_relative = 1e-14);
    }

    #[test]
    fn digamma_recurrence_value_at_two() {
        assert_relative_eq!(digamma(2.0).unwrap(), 1.0 - EULER_GAMMA, max_relative = 1e-13);
    }

    #[test]
    fn digamma_half_integer_closed_form() {
        // ψ(n + 1/2) = −γ − 2 ln 2 + Σ_{k=1}^{n} 2/(2k−1)
        let n = 10;
        let mut expected = -EULER_GAMMA - 2.0 * core::f64::consts::LN_2;
        for k in 1..=n {
            expected += 2.0 / (2.0 * k as f64 - 1.0);
        }
        assert_relative_eq!(digamma(10.5).unwrap(), expected, max_relative = 1e-13);
    }

    #[test]
    fn digamma_rejects_non_positive() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.5).is_err());
        assert!(digamma(f64::NAN).is_err());
    }

    #[test]
    fn sin_pi_exact_zeros() {
        for k in -5..5 {
            assert_eq!(sin_pi(k as f64), 0.0);
        }
        assert_relative_eq!(sin_pi(0.5), 1.0);
        assert_relative_eq!(sin_pi(-0.5), -1.0);
        assert_relative_eq!(sin_pi(2.25), (PI * 0.25).sin(), max_relative = 1e-15);
    }

    #[test]
    fn polynomial_path_matches_libm() {
        let mut worst: f64 = 0.0;
        // offset from the poles, where the reduction inside sin_pi alone
        // costs relative accuracy
        for i in 1..=7000 {
            let z = -38.0 + i as f64 * 0.01 + 0.005;
            let oracle = 1.0 / libm::tgamma(z);
            worst = worst.max(((reciprocal_gamma(z) - oracle) / oracle).abs());
        }
        assert!(worst < 1e-13, "{worst:e}");
        // integers are factorials
        assert_eq!(reciprocal_gamma(1.0), 1.0);
        assert_relative_eq!(reciprocal_gamma(11.0), 1.0 / 3_628_800.0, max_relative = 1e-14);
    }

    #[test]
    fn reciprocal_gamma_matches_gamma_and_poles() {
        assert_relative_eq!(reciprocal_gamma(0.5), 1.0 / PI.sqrt(), max_relative = 1e-14);
        assert_eq!(reciprocal_gamma(0.0), 0.0);
        assert_eq!(reciprocal_gamma(-3.0), 0.0);
        // Γ(−0.5) = −2√π
        assert_relative_eq!(reciprocal_gamma(-0.5), -1.0 / (2.0 * PI.sqrt()), max_relative = 1e-14);
    }

    #[test]
    fn reciprocal_gamma_derivative_matches_finite_difference() {
        for &z in &[2.5, 0.3, -0.4, -1.7, 0.0, -2.0] {
            let h = 1e-5;
            let fd = (reciprocal_gamma(z + h) - reciprocal_gamma(z - h)) / (2.0 * h);
            assert_relative_eq!(reciprocal_gamma_derivative(z), fd, max_relative = 1e-7, epsilon = 1e-9);
        }
    }
}
