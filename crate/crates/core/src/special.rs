//! Scalar special functions shared by the analytical and statistical code.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        // sin(x)/x = 1 - x²/6 + O(x⁴)
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Standard normal CDF Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal density φ(z).
pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Density of N(0, variance) at `x`.
pub fn gaussian_pdf(x: f64, variance: f64) -> f64 {
    (-0.5 * x * x / variance).exp() / (2.0 * PI * variance).sqrt()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sinc_limits() {
        assert_eq!(sinc(0.0), 1.0);
        assert_abs_diff_eq!(sinc(PI), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sinc(1e-9), 1.0, epsilon = 1e-15);
        assert_eq!(sinc(-1.3), sinc(1.3));
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // Φ(1.959963984540054) = 0.975
        assert_abs_diff_eq!(normal_cdf(1.959_963_984_540_054), 0.975, epsilon = 1e-15);
        assert!(normal_cdf(-40.0) >= 0.0);
        assert_abs_diff_eq!(normal_cdf(-10.0), 7.619_853_024_160_527e-24, epsilon = 1e-36);
    }

    #[test]
    fn db_roundtrip() {
        assert_abs_diff_eq!(db_to_linear(10.0), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(db_to_linear(0.0), 1.0);
    }
}
