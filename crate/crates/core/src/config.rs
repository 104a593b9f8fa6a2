//! Scenario configuration and its `key = value` text format.
//!
//! ```text
//! # fig1.cfg
//! n_ports = 20
//! elements = 40
//! snr_e_db = 10
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are an error.

use std::fmt;
use std::str::FromStr;

use crate::cascade::LinkStats;
use crate::correlation::PortGeometry;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureGrid;
use crate::special::db_to_linear;

/// How the common latent factor enters the best-port CDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LatentMode {
    /// Latent factor scaled by `√ρ₀` and integrated over `[−H, H]`.
    #[default]
    Corrected,
    /// Latent factor scaled by `ρ₀`, integrated over `[0, H]` with the
    /// doubled prefactor `Hπ/U`.
    PaperLiteral,
}

impl LatentMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LatentMode::Corrected => "corrected",
            LatentMode::PaperLiteral => "paper_literal",
        }
    }
}

impl fmt::Display for LatentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LatentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrected" => Ok(LatentMode::Corrected),
            "paper_literal" | "paper-literal" | "literal" => Ok(LatentMode::PaperLiteral),
            other => Err(Error::invalid(
                "mode",
                format!("expected `corrected` or `paper_literal`, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    Legitimate,
    Eavesdropper,
}

/// All physical and numerical parameters of one scenario. Defaults reproduce
/// the reference operating point (`ε₁ʳ = ε₂ʳ = ε₁ᵉ = 1/2`, `ε₂ᵉ = 1/20`,
/// `W = 5`, `R_s = 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_ports: usize,
    pub aperture: f64,
    pub elements: usize,
    pub eps1_r: f64,
    pub eps2_r: f64,
    pub eps1_e: f64,
    pub eps2_e: f64,
    pub snr_r_db: f64,
    pub snr_e_db: f64,
    pub target_rate: f64,
    pub lambda_th: f64,
    pub u_l: usize,
    pub u_p: usize,
    pub sigmas: f64,
    pub mode: LatentMode,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_ports: 20,
            aperture: 5.0,
            elements: 40,
            eps1_r: 0.5,
            eps2_r: 0.5,
            eps1_e: 0.5,
            eps2_e: 0.05,
            snr_r_db: 10.0,
            snr_e_db: 4.0,
            target_rate: 2.0,
            lambda_th: crate::correlation::DEFAULT_THRESHOLD,
            u_l: crate::quadrature::DEFAULT_ORDER,
            u_p: crate::quadrature::DEFAULT_ORDER,
            sigmas: crate::quadrature::DEFAULT_SIGMAS,
            mode: LatentMode::Corrected,
            trials: 100_000,
            seed: 0x5EC2E7,
        }
    }
}

/// Keys accepted by [`SystemConfig::set`], in file order.
pub const KEYS: &[&str] = &[
    "n_ports",
    "aperture",
    "elements",
    "eps1_r",
    "eps2_r",
    "eps1_e",
    "eps2_e",
    "snr_r_db",
    "snr_e_db",
    "target_rate",
    "lambda_th",
    "u_l",
    "u_p",
    "sigmas",
    "mode",
    "trials",
    "seed",
];

fn parse<T: FromStr>(field: &'static str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(field, format!("cannot parse `{value}`")))
}

impl SystemConfig {
    /// Parses a config file body on top of the defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv_str(text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines onto `self`.
    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Config {
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Sets one field by name. Accepts `-` in place of `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        match key.as_str() {
            "n_ports" => self.n_ports = parse("n_ports", value)?,
            "aperture" => self.aperture = parse("aperture", value)?,
            "elements" => self.elements = parse("elements", value)?,
            "eps1_r" => self.eps1_r = parse("eps1_r", value)?,
            "eps2_r" => self.eps2_r = parse("eps2_r", value)?,
            "eps1_e" => self.eps1_e = parse("eps1_e", value)?,
            "eps2_e" => self.eps2_e = parse("eps2_e", value)?,
            "snr_r_db" => self.snr_r_db = parse("snr_r_db", value)?,
            "snr_e_db" => self.snr_e_db = parse("snr_e_db", value)?,
            "target_rate" => self.target_rate = parse("target_rate", value)?,
            "lambda_th" => self.lambda_th = parse("lambda_th", value)?,
            "u_l" => self.u_l = parse("u_l", value)?,
            "u_p" => self.u_p = parse("u_p", value)?,
            "sigmas" => self.sigmas = parse("sigmas", value)?,
            "mode" => self.mode = value.parse()?,
            "trials" => self.trials = parse("trials", value)?,
            "seed" => self.seed = parse("seed", value)?,
            _ => return Err(Error::invalid("key", format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Serialises every field in [`KEYS`] order; parses back to `self`.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = match *key {
                "n_ports" => self.n_ports.to_string(),
                "aperture" => self.aperture.to_string(),
                "elements" => self.elements.to_string(),
                "eps1_r" => self.eps1_r.to_string(),
                "eps2_r" => self.eps2_r.to_string(),
                "eps1_e" => self.eps1_e.to_string(),
                "eps2_e" => self.eps2_e.to_string(),
                "snr_r_db" => self.snr_r_db.to_string(),
                "snr_e_db" => self.snr_e_db.to_string(),
                "target_rate" => self.target_rate.to_string(),
                "lambda_th" => self.lambda_th.to_string(),
                "u_l" => self.u_l.to_string(),
                "u_p" => self.u_p.to_string(),
                "sigmas" => self.sigmas.to_string(),
                "mode" => self.mode.to_string(),
                "trials" => self.trials.to_string(),
                "seed" => self.seed.to_string(),
                _ => unreachable!(),
            };
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }

    /// Checks every field, reporting the first offending one by name.
    pub fn validate(&self) -> Result<()> {
        PortGeometry::new(self.n_ports, self.aperture)?;
        for (field, v) in [
            ("eps1_r", self.eps1_r),
            ("eps2_r", self.eps2_r),
            ("eps1_e", self.eps1_e),
            ("eps2_e", self.eps2_e),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("variance must be positive, got {v}")));
            }
        }
        if self.elements == 0 {
            return Err(Error::invalid("elements", "need at least one RIS element"));
        }
        for (field, v) in [("snr_r_db", self.snr_r_db), ("snr_e_db", self.snr_e_db)] {
            if !v.is_finite() {
                return Err(Error::invalid(field, format!("must be finite, got {v}")));
            }
        }
        if !(self.target_rate.is_finite() && self.target_rate >= 0.0) {
            return Err(Error::invalid(
                "target_rate",
                format!("must be finite and >= 0, got {}", self.target_rate),
            ));
        }
        if !(self.lambda_th > 0.0 && self.lambda_th < 1.0) {
            return Err(Error::invalid(
                "lambda_th",
                format!("must lie in (0, 1), got {}", self.lambda_th),
            ));
        }
        if self.u_l == 0 {
            return Err(Error::invalid("u_l", "quadrature order must be >= 1"));
        }
        if self.u_p == 0 {
            return Err(Error::invalid("u_p", "quadrature order must be >= 1"));
        }
        if !(self.sigmas.is_finite() && self.sigmas > 0.0) {
            return Err(Error::invalid("sigmas", format!("must be positive, got {}", self.sigmas)));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<PortGeometry> {
        PortGeometry::new(self.n_ports, self.aperture)
    }

    pub fn link(&self, receiver: Receiver) -> Result<LinkStats> {
        match receiver {
            Receiver::Legitimate => LinkStats::new(self.eps1_r, self.eps2_r, self.elements),
            Receiver::Eavesdropper => LinkStats::new(self.eps1_e, self.eps2_e, self.elements),
        }
    }

    /// `P/σ_r²` in linear units.
    pub fn snr_r(&self) -> f64 {
        db_to_linear(self.snr_r_db)
    }

    /// `P/σ_e²` in linear units.
    pub fn snr_e(&self) -> f64 {
        db_to_linear(self.snr_e_db)
    }

    pub fn grid(&self) -> Result<QuadratureGrid> {
        QuadratureGrid::new(self.u_l, self.u_p, self.sigmas, self.mode)
    }
}
