//! Statistics of the co-phased RIS cascade `γ_k = Σ_m |h_m| |v_{m,k}|`.
//!
//! With `h_m ~ CN(0, ε₁)` and `v_{m,k} ~ CN(0, ε₂)` each envelope is Rayleigh,
//! so one product term has mean `π√(ε₁ε₂)/4` and variance `ε₁ε₂(1 − π²/16)`.
//! For large `M` the sum is treated as Gaussian.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::normal_cdf;

/// Per-zone link parameters for one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    eps1: f64,
    eps2: f64,
    m_elements: usize,
}

impl LinkStats {
    pub fn new(eps1: f64, eps2: f64, m_elements: usize) -> Result<Self> {
        check_variance("eps1", eps1)?;
        check_variance("eps2", eps2)?;
        if m_elements == 0 {
            return Err(Error::invalid("elements", "need at least one RIS element"));
        }
        Ok(Self {
            eps1,
            eps2,
            m_elements,
        })
    }

    pub fn eps1(&self) -> f64 {
        self.eps1
    }

    pub fn eps2(&self) -> f64 {
        self.eps2
    }

    pub fn m_elements(&self) -> usize {
        self.m_elements
    }
}

fn check_variance(field: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(field, format!("variance must be positive, got {v}")));
    }
    Ok(())
}

/// Mean and variance of `|h||v|` for independent Rayleigh envelopes.
pub fn product_moments(eps1: f64, eps2: f64) -> Result<(f64, f64)> {
    check_variance("eps1", eps1)?;
    check_variance("eps2", eps2)?;
    let g = eps1 * eps2;
    Ok((PI * g.sqrt() / 4.0, g * (1.0 - PI * PI / 16.0)))
}

/// Correlation between cascaded gains of two ports whose `v` draws are
/// independent but share the same `h_m`: `π(4 − π)/(16 − π²)`.
pub fn rho0() -> f64 {
    PI * (4.0 - PI) / (16.0 - PI * PI)
}

/// CLT model of one receiver: `B` effective branches, each Gaussian with the
/// cascade mean and variance, pairwise correlated by `ρ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianApprox {
    pub mean: f64,
    pub variance: f64,
    pub rho0: f64,
    pub blocks: usize,
}

impl GaussianApprox {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// CDF of a single branch, `Normal(E_γ, V_γ)`.
    pub fn single_branch_cdf(&self, y: f64) -> f64 {
        normal_cdf((y - self.mean) / self.std_dev())
    }
}

/// CLT parameters for `link`, carrying the block count fitted for this
/// receiver.
pub fn gaussian_params(link: &LinkStats, blocks: usize) -> GaussianApprox {
    let (mean, variance) =
        product_moments(link.eps1, link.eps2).expect("LinkStats holds positive variances");
    let m = link.m_elements as f64;
    GaussianApprox {
        mean: m * mean,
        variance: m * variance,
        rho0: rho0(),
        blocks,
    }
}
