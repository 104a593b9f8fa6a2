//! First-kind Gauss-Chebyshev quadrature with the weight divided out.
//!
//! On `[a, b]` the rule reads
//! `∫ f ≈ (b − a)π/(2U) Σ_l √(1 − q_l²) f(x_l)`,
//! `q_l = cos((2l − 1)π/(2U))`, `x_l = ((b − a)q_l + a + b)/2`.
//! It is the midpoint rule in `θ = arccos q`, so integrands that decay
//! smoothly toward both ends converge very quickly.

use std::f64::consts::PI;

use crate::cascade::GaussianApprox;
use crate::config::LatentMode;
use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 128;
pub const DEFAULT_SIGMAS: f64 = 10.0;

/// Nodes `q_1..q_U`, descending from just below 1 to just above −1.
pub fn chebyshev_nodes(order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(Error::invalid("order", "quadrature order must be >= 1"));
    }
    Ok((1..=order).map(|l| node_angle(l, order).cos()).collect())
}

fn node_angle(l: usize, order: usize) -> f64 {
    (2 * l - 1) as f64 * PI / (2 * order) as f64
}

/// Precomputed nodes and `√(1 − q²)` factors for one order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebyshevRule {
    pub fn new(order: usize) -> Result<Self> {
        let nodes = chebyshev_nodes(order)?;
        // sin of the node angle is √(1 − q²) without cancellation near ±1
        let weights = (1..=order).map(|l| node_angle(l, order).sin()).collect();
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Abscissae and effective weights mapped onto `[lower, upper]`.
    pub fn mapped(&self, lower: f64, upper: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (upper - lower);
        let mid = 0.5 * (upper + lower);
        let scale = (upper - lower) * PI / (2 * self.order()) as f64;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&q, &w)| (half * q + mid, scale * w))
    }

    /// Integrates without checking the integrand.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, lower: f64, upper: f64) -> f64 {
        self.mapped(lower, upper).map(|(x, w)| w * f(x)).sum()
    }

    /// Integrates, failing on the first non-finite integrand value.
    pub fn try_integrate<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
        lower: f64,
        upper: f64,
        context: &'static str,
    ) -> Result<f64> {
        let mut acc = 0.0;
        for (x, w) in self.mapped(lower, upper) {
            let value = f(x);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    context,
                    at: x,
                    value,
                });
            }
            acc += w * value;
        }
        Ok(acc)
    }
}

/// One-shot form of [`ChebyshevRule::try_integrate`].
pub fn integrate_chebyshev<F: FnMut(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    order: usize,
) -> Result<f64> {
    if upper.is_nan() || lower.is_nan() || upper <= lower {
        return Err(Error::invalid("upper", format!("need upper > lower, got [{lower}, {upper}]")));
    }
    ChebyshevRule::new(order)?.try_integrate(f, lower, upper, "integrand")
}

/// Finite stand-in for the infinite upper limit: `E_γ + sigmas·√V_γ`,
/// never below `sigmas·√V_γ`.
pub fn truncation_bound(approx: &GaussianApprox, sigmas: f64) -> f64 {
    let spread = sigmas * approx.std_dev();
    (approx.mean + spread).max(spread)
}

/// Everything the analytical integrals need: the latent-factor rule
/// (`U_l`, also used for the inner eavesdropper integral), the outer rule
/// (`U_p`), the truncation width and the latent-domain convention.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub latent: ChebyshevRule,
    pub outer: ChebyshevRule,
    pub sigmas: f64,
    pub mode: LatentMode,
}

impl QuadratureGrid {
    pub fn new(latent_order: usize, outer_order: usize, sigmas: f64, mode: LatentMode) -> Result<Self> {
        if !(sigmas.is_finite() && sigmas > 0.0) {
            return Err(Error::invalid("sigmas", format!("must be positive, got {sigmas}")));
        }
        Ok(Self {
            latent: ChebyshevRule::new(latent_order)?,
            outer: ChebyshevRule::new(outer_order)?,
            sigmas,
            mode,
        })
    }

    /// `H` for one receiver.
    pub fn truncation(&self, approx: &GaussianApprox) -> f64 {
        truncation_bound(approx, self.sigmas)
    }

    /// Same grid with both orders doubled.
    pub fn refined(&self) -> Self {
        Self::new(
            2 * self.latent.order(),
            2 * self.outer.order(),
            self.sigmas,
            self.mode,
        )
        .expect("doubling keeps orders valid")
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self::new(DEFAULT_ORDER, DEFAULT_ORDER, DEFAULT_SIGMAS, LatentMode::Corrected)
            .expect("defaults are valid")
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::special::{gaussian_pdf, normal_cdf};
    use approx::assert_abs_diff_eq;

    #[test]
    fn node_examples() {
        assert!(chebyshev_nodes(0).is_err());
        let one = chebyshev_nodes(1).unwrap();
        assert_abs_diff_eq!(one[0], 0.0, epsilon = 1e-16);
        let two = chebyshev_nodes(2).unwrap();
        assert_abs_diff_eq!(two[0], 0.707_106_781, epsilon = 1e-9);
        assert_abs_diff_eq!(two[1], -0.707_106_781, epsilon = 1e-9);
        let four: f64 = chebyshev_nodes(4).unwrap().iter().sum();
        assert_abs_diff_eq!(four, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn nodes_are_strictly_interior_and_descending() {
        for order in [1, 2, 7, 128, 1000] {
            let q = chebyshev_nodes(order).unwrap();
            assert!(q.iter().all(|&x| x > -1.0 && x < 1.0));
            assert!(q.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn rule_examples() {
        assert_abs_diff_eq!(integrate_chebyshev(|_| 1.0, 0.0, 2.0, 64).unwrap(), 2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(integrate_chebyshev(|x| x, 0.0, 1.0, 64).unwrap(), 0.5, epsilon = 1e-3);
        let mass = integrate_chebyshev(|x| gaussian_pdf(x, 1.0), -10.0, 10.0, 256).unwrap();
        let exact = normal_cdf(10.0) - normal_cdf(-10.0);
        assert_abs_diff_eq!(mass, exact, epsilon = 1e-4);
    }

    #[test]
    fn rule_rejects_bad_input() {
        assert!(integrate_chebyshev(|x| x, 1.0, 1.0, 8).is_err());
        assert!(integrate_chebyshev(|x| x, 0.0, 1.0, 0).is_err());
        let err = integrate_chebyshev(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, 8).unwrap_err();
        match err {
            Error::NonFinite { at, .. } => assert!(at > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constants_within_tolerance_on_wide_intervals() {
        for order in [64, 128, 256] {
            for (a, b) in [(-50.0, 50.0), (0.0, 100.0), (3.0, 3.5)] {
                let got = integrate_chebyshev(|_| 1.0, a, b, order).unwrap();
                // Σ sin((2l−1)π/2U) = 1/sin(π/2U), so the rule overshoots by ≈ π²/(24U²).
                let half = std::f64::consts::PI / (2.0 * order as f64);
                let closed = (b - a) * half / half.sin();
                assert_abs_diff_eq!(got, closed, epsilon = 1e-9 * (b - a));
                assert!((got / (b - a) - 1.0).abs() <= 1.1e-4, "order={order} [{a},{b}] got={got}");
            }
        }
    }

    #[test]
    fn error_shrinks_when_order_doubles() {
        let gaussians = [(0.0, 1.0), (2.0, 0.3), (-1.0, 2.5)];
        for (mu, var) in gaussians {
            let f = |x: f64| gaussian_pdf(x - mu, var);
            let exact = normal_cdf((8.0 - mu) / var.sqrt()) - normal_cdf((-8.0 - mu) / var.sqrt());
            let mut prev = f64::INFINITY;
            for order in [16, 32, 64, 128] {
                let err = (integrate_chebyshev(f, -8.0, 8.0, order).unwrap() - exact).abs();
                assert!(err <= prev, "gaussian ({mu},{var}) order {order}: {err} > {prev}");
                prev = err;
            }
        }
        let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
        // ∫_{-6}^{6} σ(x) dx = 6 by symmetry
        let mut prev = f64::INFINITY;
        for order in [8, 16, 32, 64, 128] {
            let err = (integrate_chebyshev(logistic, -6.0, 6.0, order).unwrap() - 6.0).abs();
            assert!(err <= prev);
            prev = err;
        }
    }

    #[test]
    fn truncation_examples() {
        let mk = |mean: f64, variance: f64| GaussianApprox {
            mean,
            variance,
            rho0: crate::cascade::rho0(),
            blocks: 1,
        };
        assert_abs_diff_eq!(truncation_bound(&mk(15.708, 3.832), 10.0), 35.283, epsilon = 1e-3);
        assert_abs_diff_eq!(truncation_bound(&mk(0.0, 1.0), 10.0), 10.0);
        assert_abs_diff_eq!(truncation_bound(&mk(-4.0, 1.0), 10.0), 10.0);
        let a = mk(3.0, 2.0);
        assert!(truncation_bound(&a, 20.0) >= truncation_bound(&a, 10.0));
    }
}
