//! Standard normal density, distribution function and interval masses.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1/√(2π)`, the peak of the standard normal density.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `1/√(2πe)`, the supremum of `|y·f(y)|`.
pub fn inv_sqrt_2pi_e() -> f64 {
    1.0 / (2.0 * PI * std::f64::consts::E).sqrt()
}

pub fn std_normal_pdf(y: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * y * y).exp()
}

/// Φ(y).
pub fn std_normal_cdf(y: f64) -> f64 {
    0.5 * libm::erfc(-y * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(y)` without cancellation.
pub fn std_normal_sf(y: f64) -> f64 {
    0.5 * libm::erfc(y * FRAC_1_SQRT_2)
}

/// `∫_a^b f(y) dy`, negated when `b < a`. Accepts infinite bounds.
pub fn normal_mass(a: f64, b: f64) -> f64 {
    if b < a {
        return -normal_mass(b, a);
    }
    if a >= 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else {
        std_normal_cdf(b) - std_normal_cdf(a)
    }
}

/// `∫_a^b y·f(y) dy = f(a) − f(b)`.
pub fn normal_first_moment(a: f64, b: f64) -> f64 {
    std_normal_pdf(a) - std_normal_pdf(b)
}
