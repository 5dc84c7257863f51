//! Standard normal kernels built on the complementary error function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, `N(x) = erfc(-x/√2)/2`.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln N(x)`, finite for every finite `x`.
///
/// Below `-30` the erfc route underflows soon after, so the asymptotic
/// Mills-ratio series takes over (truncation error far below 1 ulp there).
pub fn ln_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else if x > -30.0 {
        cdf(x).ln()
    } else {
        let r = 1.0 / (x * x);
        let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
        -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

/// Inverse Mills ratio `pdf(x)/cdf(x)`, i.e. the derivative of [`ln_cdf`].
pub fn inv_mills(x: f64) -> f64 {
    if x > -30.0 {
        pdf(x) / cdf(x)
    } else {
        (-0.5 * x * x - 0.5 * (2.0 * PI).ln() - ln_cdf(x)).exp()
    }
}
