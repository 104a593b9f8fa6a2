//! Analytical best-port gain distribution and the secrecy metrics built on it.
//!
//! Under the block-correlation model each receiver sees `B` branches
//! `γ̄_b = √(1 − ρ₀) d_b + √ρ₀ d₀ + E_γ` with `d_0..d_B ~ N(0, V_γ)` independent.
//! Conditioning on the shared factor `τ = d₀` makes the branches independent,
//! so
//!
//! ```text
//! F(y) = ∫ φ_V(τ) Φ((y − E_γ − √ρ₀ τ) / √(V_γ(1 − ρ₀)))^B dτ
//! ```
//!
//! and the density is its exact derivative. Every integral, including the
//! ASC and SOP expectations, is evaluated with the Chebyshev rule in
//! [`crate::quadrature`].

use rayon::prelude::*;

use crate::cascade::GaussianApprox;
use crate::config::LatentMode;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureGrid;
use crate::special::{gaussian_pdf, normal_cdf, normal_pdf};

/// Clamp corrections above this size are logged.
const CLAMP_WARN: f64 = 1e-3;

fn clamp_probability(p: f64, what: &str) -> f64 {
    let clamped = p.clamp(0.0, 1.0);
    if (clamped - p).abs() > CLAMP_WARN {
        log::warn!("{what} = {p:.6} clamped to [0, 1]");
    }
    clamped
}

fn check_approx(approx: &GaussianApprox) -> Result<()> {
    if approx.blocks < 1 {
        return Err(Error::invalid("blocks", "need B >= 1"));
    }
    if !(approx.variance.is_finite() && approx.variance > 0.0) {
        return Err(Error::invalid("variance", format!("must be positive, got {}", approx.variance)));
    }
    if !(approx.rho0 > 0.0 && approx.rho0 < 1.0) {
        return Err(Error::invalid("rho0", format!("must lie in (0, 1), got {}", approx.rho0)));
    }
    if !approx.mean.is_finite() {
        return Err(Error::invalid("mean", "must be finite"));
    }
    Ok(())
}

/// Best-port gain distribution of one receiver with the latent-factor
/// quadrature precomputed.
#[derive(Debug, Clone)]
pub struct MaxGainDistribution {
    mean: f64,
    cond_sd: f64,
    blocks: i32,
    // (shift applied to the mean, quadrature weight × latent density)
    latent: Vec<(f64, f64)>,
}

impl MaxGainDistribution {
    pub fn new(approx: &GaussianApprox, grid: &QuadratureGrid) -> Result<Self> {
        check_approx(approx)?;
        let h = grid.truncation(approx);
        let (lower, scale, fold) = match grid.mode {
            LatentMode::Corrected => (-h, approx.rho0.sqrt(), 1.0),
            LatentMode::PaperLiteral => (0.0, approx.rho0, 2.0),
        };
        let latent = grid
            .latent
            .mapped(lower, h)
            .map(|(tau, w)| (scale * tau, fold * w * gaussian_pdf(tau, approx.variance)))
            .collect();
        Ok(Self {
            mean: approx.mean,
            cond_sd: (approx.variance * (1.0 - approx.rho0)).sqrt(),
            blocks: i32::try_from(approx.blocks)
                .map_err(|_| Error::invalid("blocks", "too many blocks"))?,
            latent,
        })
    }

    fn raw_cdf(&self, y: f64) -> f64 {
        self.latent
            .iter()
            .map(|&(shift, w)| w * normal_cdf((y - self.mean - shift) / self.cond_sd).powi(self.blocks))
            .sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        clamp_probability(self.raw_cdf(y), "max-gain CDF")
    }

    pub fn pdf(&self, y: f64) -> f64 {
        let b = self.blocks;
        let sum: f64 = self
            .latent
            .iter()
            .map(|&(shift, w)| {
                let z = (y - self.mean - shift) / self.cond_sd;
                w * b as f64 * normal_cdf(z).powi(b - 1) * normal_pdf(z)
            })
            .sum();
        (sum / self.cond_sd).max(0.0)
    }

    pub fn evaluate(&self, y: f64) -> DistributionEval {
        DistributionEval {
            point: y,
            cdf: self.cdf(y),
            pdf: self.pdf(y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionEval {
    pub point: f64,
    pub cdf: f64,
    pub pdf: f64,
}

/// CDF of the best-port gain at `y`.
pub fn max_gain_cdf(y: f64, approx: &GaussianApprox, grid: &QuadratureGrid) -> Result<f64> {
    Ok(MaxGainDistribution::new(approx, grid)?.cdf(y))
}

/// Density of the best-port gain at `y`; the derivative of [`max_gain_cdf`].
pub fn max_gain_pdf(y: f64, approx: &GaussianApprox, grid: &QuadratureGrid) -> Result<f64> {
    Ok(MaxGainDistribution::new(approx, grid)?.pdf(y))
}

/// Achievable rate `½ log₂(1 + snr·gain²)` in bit/s/Hz.
pub fn rate(gain: f64, snr: f64) -> f64 {
    0.5 * (snr * gain * gain).ln_1p() / std::f64::consts::LN_2
}

/// Legitimate and eavesdropper models plus the link budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WiretapScenario {
    pub legit: GaussianApprox,
    pub eaves: GaussianApprox,
    /// `P/σ_r²`, linear.
    pub snr_r: f64,
    /// `P/σ_e²`, linear.
    pub snr_e: f64,
    /// `σ_e/σ_r`, implied by the two SNRs sharing one transmit power.
    pub noise_ratio: f64,
    pub target_rate: f64,
}

impl WiretapScenario {
    pub fn new(
        legit: GaussianApprox,
        eaves: GaussianApprox,
        snr_r: f64,
        snr_e: f64,
        target_rate: f64,
    ) -> Result<Self> {
        for (field, v) in [("snr_r", snr_r), ("snr_e", snr_e)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("must be positive, got {v}")));
            }
        }
        if !(target_rate.is_finite() && target_rate >= 0.0) {
            return Err(Error::invalid("target_rate", format!("must be >= 0, got {target_rate}")));
        }
        Ok(Self {
            legit,
            eaves,
            snr_r,
            snr_e,
            noise_ratio: (snr_r / snr_e).sqrt(),
            target_rate,
        })
    }
}

/// `[R_r − R_e]⁺` for one channel realisation.
pub fn secrecy_capacity(gain_r: f64, gain_e: f64, scenario: &WiretapScenario) -> f64 {
    (rate(gain_r, scenario.snr_r) - rate(gain_e, scenario.snr_e)).max(0.0)
}

/// Average secrecy capacity `C̄_s = C_s¹ − C_s²`.
///
/// `C_s¹ = ½∫₀^{H_r} log₂(1 + snr_r β²) f_r(β) F_e(kβ) dβ` and
/// `C_s² = ½∫₀^{H_r} f_r(β) ∫₀^{kβ} log₂(1 + snr_e χ²) f_e(χ) dχ dβ` with
/// `k = σ_e/σ_r`. The outer integral uses `U_p` nodes, the inner one `U_l`.
pub fn average_secrecy_capacity(scenario: &WiretapScenario, grid: &QuadratureGrid) -> Result<f64> {
    let legit = MaxGainDistribution::new(&scenario.legit, grid)?;
    let eaves = MaxGainDistribution::new(&scenario.eaves, grid)?;
    let k = scenario.noise_ratio;
    let h_r = grid.truncation(&scenario.legit);

    let outer: Vec<(f64, f64)> = grid.outer.mapped(0.0, h_r).collect();
    let terms: Vec<Result<f64>> = outer
        .par_iter()
        .map(|&(beta, w)| {
            let f_r = legit.pdf(beta);
            let direct = 2.0 * rate(beta, scenario.snr_r) * eaves.cdf(k * beta);
            let leaked = grid.latent.try_integrate(
                |chi| 2.0 * rate(chi, scenario.snr_e) * eaves.pdf(chi),
                0.0,
                k * beta,
                "eavesdropper rate integrand",
            )?;
            let value = 0.5 * f_r * (direct - leaked);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    context: "average secrecy capacity integrand",
                    at: beta,
                    value,
                });
            }
            Ok(w * value)
        })
        .collect();
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total.max(0.0))
}

/// Secrecy outage probability `Pr(C_s < R_s)`.
///
/// Integrates `F_r(√((2^{2R_s}(1 + snr_e β²) − 1)/snr_r)) f_e(β)` over
/// `β ∈ [0, H_e]`.
pub fn secrecy_outage_probability(scenario: &WiretapScenario, grid: &QuadratureGrid) -> Result<f64> {
    let legit = MaxGainDistribution::new(&scenario.legit, grid)?;
    let eaves = MaxGainDistribution::new(&scenario.eaves, grid)?;
    let h_e = grid.truncation(&scenario.eaves);
    let growth = 2f64.powf(2.0 * scenario.target_rate);
    let p = grid.outer.try_integrate(
        |beta| {
            let needed = ((growth * (1.0 + scenario.snr_e * beta * beta) - 1.0) / scenario.snr_r).max(0.0);
            legit.cdf(needed.sqrt()) * eaves.pdf(beta)
        },
        0.0,
        h_e,
        "secrecy outage integrand",
    )?;
    Ok(clamp_probability(p, "secrecy outage probability"))
}
