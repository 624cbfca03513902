//! Standard normal helpers used throughout the crate.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF, exact at ±∞.
#[inline]
pub fn cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    }
}

/// Upper tail `P(Z > x)`.
#[inline]
pub fn sf(x: f64) -> f64 {
    cdf(-x)
}

#[inline]
pub fn pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
    }
}

/// Standard normal quantile. Returns ±∞ at the endpoints.
#[inline]
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        -SQRT_2 * erfc_inv(2.0 * p)
    }
}

/// `z_{1-alpha}`, the upper `alpha` critical value.
#[inline]
pub fn upper_critical(alpha: f64) -> f64 {
    -quantile(alpha)
}
