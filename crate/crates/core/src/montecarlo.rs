//! Exact channel simulator.
//!
//! Each trial draws `h_m ~ CN(0, ε₁)` per RIS element and a port vector
//! `v_m ~ CN(0, ε₂Σ)` per element, forms `γ_k = Σ_m |h_m||v_{m,k}|` and keeps
//! the best port. Trial `t` always reads from ChaCha stream `t` of the
//! configured seed, so results do not depend on how trials are scheduled.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analytics::rate;
use crate::cascade::LinkStats;
use crate::config::{Receiver, SystemConfig};
use crate::correlation::{build_correlation_matrix, CorrelationMatrix, PortGeometry};
use crate::error::{Error, Result};
use crate::stats::{mean_var, wilson_interval, Z_95};

/// Outage counts below this are flagged as low confidence.
pub const MIN_CONFIDENT_EVENTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// FAS receivers behind the RIS.
    FasRis,
    /// Single fixed antenna behind the RIS.
    NoFas,
    /// FAS receivers on a direct Rayleigh link, power-matched to the cascade.
    NoRis,
    /// Single fixed antenna on a direct Rayleigh link.
    NoFasNoRis,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::FasRis,
        ScenarioKind::NoFas,
        ScenarioKind::NoRis,
        ScenarioKind::NoFasNoRis,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::FasRis => "fas_ris",
            ScenarioKind::NoFas => "no_fas",
            ScenarioKind::NoRis => "no_ris",
            ScenarioKind::NoFasNoRis => "no_fas_no_ris",
        }
    }

    pub fn has_fas(&self) -> bool {
        matches!(self, ScenarioKind::FasRis | ScenarioKind::NoRis)
    }

    pub fn has_ris(&self) -> bool {
        matches!(self, ScenarioKind::FasRis | ScenarioKind::NoFas)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.replace('-', "_"))
            .ok_or_else(|| Error::invalid("scenario", format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub trials: usize,
    pub seed: u64,
    pub scenario_kind: ScenarioKind,
    pub system: SystemConfig,
}

impl SimulationConfig {
    /// Takes `trials` and `seed` from `system`.
    pub fn new(system: SystemConfig, scenario_kind: ScenarioKind) -> Self {
        Self {
            trials: system.trials,
            seed: system.seed,
            scenario_kind,
            system,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        self.system.validate()
    }
}

/// Monte Carlo estimate with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub value: f64,
    pub half_width_95: f64,
    pub lower: f64,
    pub upper: f64,
    pub trials_used: usize,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestPortSample {
    pub gamma_r_star: f64,
    pub gamma_e_star: f64,
}

/// Draws per-port gains for one receiver.
#[derive(Debug, Clone)]
pub struct PortSampler {
    n_ports: usize,
    elements: usize,
    // row-major lower triangle of the colouring factor
    factor: Vec<f64>,
    h_scale: f64,
    v_scale: f64,
    direct: bool,
}

impl PortSampler {
    /// RIS cascade: `γ_k = Σ_m |h_m||v_{m,k}|`.
    pub fn cascade(link: &LinkStats, corr: &CorrelationMatrix) -> Result<Self> {
        Self::build(link, corr, false)
    }

    /// Direct link `g ~ CN(0, M ε₁ ε₂ Σ)`, gain `|g_k|`.
    pub fn direct(link: &LinkStats, corr: &CorrelationMatrix) -> Result<Self> {
        Self::build(link, corr, true)
    }

    fn build(link: &LinkStats, corr: &CorrelationMatrix, direct: bool) -> Result<Self> {
        let l: DMatrix<f64> = corr.sampling_factor()?;
        let n = corr.dim();
        let mut factor = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                factor.push(l[(i, j)]);
            }
        }
        let (h_scale, v_scale) = if direct {
            (0.0, (link.m_elements() as f64 * link.eps1() * link.eps2() / 2.0).sqrt())
        } else {
            ((link.eps1() / 2.0).sqrt(), (link.eps2() / 2.0).sqrt())
        };
        Ok(Self {
            n_ports: n,
            elements: link.m_elements(),
            factor,
            h_scale,
            v_scale,
            direct,
        })
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    /// Fills `out` (length `N`) with the port gains of one realisation.
    /// `scratch` must hold at least `2N` values.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut [f64]) {
        let n = self.n_ports;
        let (re, im) = scratch[..2 * n].split_at_mut(n);
        let rounds = if self.direct { 1 } else { self.elements };
        out[..n].fill(0.0);
        for _ in 0..rounds {
            let h = if self.direct {
                1.0
            } else {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                self.h_scale * a.hypot(b)
            };
            for j in 0..n {
                re[j] = rng.sample(StandardNormal);
                im[j] = rng.sample(StandardNormal);
            }
            let mut row = 0;
            for (k, gain) in out[..n].iter_mut().enumerate() {
                let coeffs = &self.factor[row..row + k + 1];
                let (mut vr, mut vi) = (0.0, 0.0);
                for (c, (x, y)) in coeffs.iter().zip(re.iter().zip(im.iter())) {
                    vr += c * x;
                    vi += c * y;
                }
                *gain += h * self.v_scale * vr.hypot(vi);
                row += k + 1;
            }
        }
    }

    /// `trials × N` gains, row-major, trial `t` drawn from stream `t`.
    pub fn sample_trials(&self, trials: usize, seed: u64) -> Vec<f64> {
        let base = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n_ports;
        let mut out = vec![0.0; trials * n];
        out.par_chunks_mut(n)
            .enumerate()
            .for_each_init(
                || vec![0.0; 2 * n],
                |scratch, (t, row)| {
                    let mut rng = trial_rng(&base, t);
                    self.sample_into(&mut rng, row, scratch);
                },
            );
        out
    }
}

fn trial_rng(base: &ChaCha8Rng, trial: usize) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial as u64);
    rng.set_word_pos(0);
    rng
}

/// One realisation of the `N` cascaded port gains.
pub fn sample_port_gains<R: Rng + ?Sized>(
    link: &LinkStats,
    corr: &CorrelationMatrix,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let sampler = PortSampler::cascade(link, corr)?;
    let mut out = vec![0.0; sampler.n_ports];
    let mut scratch = vec![0.0; 2 * sampler.n_ports];
    sampler.sample_into(rng, &mut out, &mut scratch);
    Ok(out)
}

fn receiver_sampler(config: &SimulationConfig, receiver: Receiver) -> Result<PortSampler> {
    let sys = &config.system;
    let kind = config.scenario_kind;
    let n = if kind.has_fas() { sys.n_ports } else { 1 };
    let corr = build_correlation_matrix(&PortGeometry::new(n, sys.aperture)?);
    let link = sys.link(receiver)?;
    if kind.has_ris() {
        PortSampler::cascade(&link, &corr)
    } else {
        PortSampler::direct(&link, &corr)
    }
}

/// Best-port gains for both receivers, one entry per trial in trial order.
pub fn simulate_best_port(config: &SimulationConfig) -> Result<Vec<BestPortSample>> {
    config.validate()?;
    let legit = receiver_sampler(config, Receiver::Legitimate)?;
    let eaves = receiver_sampler(config, Receiver::Eavesdropper)?;
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let (nr, ne) = (legit.n_ports, eaves.n_ports);
    let width = nr.max(ne);
    let samples = (0..config.trials)
        .into_par_iter()
        .map_init(
            || (vec![0.0; width], vec![0.0; 2 * width]),
            |(gains, scratch), t| {
                let mut rng = trial_rng(&base, t);
                legit.sample_into(&mut rng, gains, scratch);
                let gamma_r_star = gains[..nr].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                eaves.sample_into(&mut rng, gains, scratch);
                let gamma_e_star = gains[..ne].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                BestPortSample {
                    gamma_r_star,
                    gamma_e_star,
                }
            },
        )
        .collect();
    Ok(samples)
}

fn rate_gap(s: &BestPortSample, snr_r: f64, snr_e: f64) -> f64 {
    rate(s.gamma_r_star, snr_r) - rate(s.gamma_e_star, snr_e)
}

fn capacity(s: &BestPortSample, snr_r: f64, snr_e: f64) -> f64 {
    rate_gap(s, snr_r, snr_e).max(0.0)
}

/// Mean secrecy capacity with a normal-approximation interval.
pub fn asc_from_samples(samples: &[BestPortSample], snr_r: f64, snr_e: f64) -> EstimateWithCI {
    let mv = mean_var(samples.iter().map(|s| capacity(s, snr_r, snr_e)));
    let half = Z_95 * (mv.variance / mv.count as f64).sqrt();
    EstimateWithCI {
        value: mv.mean,
        half_width_95: half,
        lower: mv.mean - half,
        upper: mv.mean + half,
        trials_used: mv.count,
        low_confidence: false,
    }
}

/// Fraction of trials with `R_r − R_e < R_s` (the same event as `C_s < R_s`
/// for `R_s > 0`) and its Wilson interval.
pub fn sop_from_samples(
    samples: &[BestPortSample],
    snr_r: f64,
    snr_e: f64,
    target_rate: f64,
) -> EstimateWithCI {
    let outages = samples
        .iter()
        // Unclipped gap, so R_s = 0 counts R_r < R_e like the closed form does.
        .filter(|s| rate_gap(s, snr_r, snr_e) < target_rate)
        .count();
    let n = samples.len();
    let (lower, upper) = wilson_interval(outages, n);
    EstimateWithCI {
        value: outages as f64 / n as f64,
        half_width_95: 0.5 * (upper - lower),
        lower,
        upper,
        trials_used: n,
        low_confidence: outages < MIN_CONFIDENT_EVENTS,
    }
}

pub fn estimate_asc(config: &SimulationConfig) -> Result<EstimateWithCI> {
    let samples = simulate_best_port(config)?;
    Ok(asc_from_samples(&samples, config.system.snr_r(), config.system.snr_e()))
}

pub fn estimate_sop(config: &SimulationConfig) -> Result<EstimateWithCI> {
    let samples = simulate_best_port(config)?;
    Ok(sop_from_samples(
        &samples,
        config.system.snr_r(),
        config.system.snr_e(),
        config.system.target_rate,
    ))
}

/// Writes `trial,gamma_r_star,gamma_e_star,c_s` rows.
pub fn write_samples_csv<W: Write>(
    samples: &[BestPortSample],
    snr_r: f64,
    snr_e: f64,
    out: W,
) -> Result<()> {
    let io = |e: csv::Error| Error::invalid("output", e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "gamma_r_star", "gamma_e_star", "c_s"])
        .map_err(io)?;
    for (t, s) in samples.iter().enumerate() {
        w.write_record([
            t.to_string(),
            s.gamma_r_star.to_string(),
            s.gamma_e_star.to_string(),
            capacity(s, snr_r, snr_e).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::invalid("output", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{gaussian_params, rho0};
    use crate::stats::pearson;
    use approx::assert_abs_diff_eq;

    fn corr(n: usize, w: f64) -> CorrelationMatrix {
        build_correlation_matrix(&PortGeometry::new(n, w).unwrap())
    }

    #[test]
    fn scenario_names_roundtrip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.as_str().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("fas".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn single_element_mean_matches_product_moment() {
        let link = LinkStats::new(1.0, 1.0, 1).unwrap();
        let s = PortSampler::cascade(&link, &corr(1, 0.0)).unwrap();
        let g = s.sample_trials(1_000_000, 11);
        let mv = mean_var(g.iter().copied());
        assert_abs_diff_eq!(mv.mean, std::f64::consts::PI / 4.0, epsilon = 0.002);
    }

    #[test]
    fn zero_aperture_best_port_is_first_port() {
        let link = LinkStats::new(0.5, 0.5, 10).unwrap();
        let s = PortSampler::cascade(&link, &corr(6, 0.0)).unwrap();
        let g = s.sample_trials(2_000, 3);
        for row in g.chunks(6) {
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(best, row[0]);
        }
    }

    #[test]
    fn cascade_mean_at_reference_link() {
        let link = LinkStats::new(0.5, 0.5, 40).unwrap();
        let s = PortSampler::cascade(&link, &corr(20, 5.0)).unwrap();
        let g = s.sample_trials(100_000, 5);
        let expected = gaussian_params(&link, 1).mean;
        for port in [0, 7, 19] {
            let mv = mean_var(g.chunks(20).map(|r| r[port]));
            assert_abs_diff_eq!(mv.mean, expected, epsilon = 0.05);
        }
    }

    #[test]
    fn moments_within_three_standard_errors() {
        let link = LinkStats::new(0.5, 0.05, 40).unwrap();
        let s = PortSampler::cascade(&link, &corr(1, 0.0)).unwrap();
        let trials = 200_000;
        let g = s.sample_trials(trials, 21);
        let mv = mean_var(g.iter().copied());
        let a = gaussian_params(&link, 1);
        let se_mean = (a.variance / trials as f64).sqrt();
        assert!((mv.mean - a.mean).abs() <= 3.0 * se_mean);
        // Var of the sample variance ≈ (μ₄ − σ⁴)/n; bound μ₄ by 3.5σ⁴ for this mildly skewed sum
        let se_var = (2.5 * a.variance * a.variance / trials as f64).sqrt();
        assert!((mv.variance - a.variance).abs() <= 3.0 * se_var);
    }

    #[test]
    fn complex_port_correlation_matches_sigma() {
        // colour the v draws directly and check the real-part correlation
        let c = corr(6, 1.3);
        let l = c.sampling_factor().unwrap();
        let base = ChaCha8Rng::seed_from_u64(99);
        let samples = 1_000_000;
        let mut cols: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(samples)).collect();
        let mut z = [0.0; 6];
        for t in 0..samples {
            let mut rng = trial_rng(&base, t);
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for i in 0..6 {
                cols[i].push((0..=i).map(|j| l[(i, j)] * z[j]).sum());
            }
        }
        for i in 0..6 {
            for j in 0..i {
                assert_abs_diff_eq!(pearson(&cols[i], &cols[j]), c.get(i, j), epsilon = 0.01);
            }
        }
    }

    #[test]
    fn independent_ports_correlate_by_rho0() {
        // N = 2, W = 0.5 puts the second port on the first sinc zero
        let link = LinkStats::new(0.5, 0.5, 100).unwrap();
        let s = PortSampler::cascade(&link, &corr(2, 0.5)).unwrap();
        let g = s.sample_trials(200_000, 8);
        let a: Vec<f64> = g.chunks(2).map(|r| r[0]).collect();
        let b: Vec<f64> = g.chunks(2).map(|r| r[1]).collect();
        assert_abs_diff_eq!(pearson(&a, &b), rho0(), epsilon = 0.02);
    }

    fn small_config(kind: ScenarioKind, trials: usize) -> SimulationConfig {
        let system = SystemConfig {
            n_ports: 8,
            elements: 10,
            trials,
            ..SystemConfig::default()
        };
        SimulationConfig::new(system, kind)
    }

    #[test]
    fn best_port_dominates_every_port() {
        let cfg = small_config(ScenarioKind::FasRis, 500);
        let legit = receiver_sampler(&cfg, Receiver::Legitimate).unwrap();
        let eaves = receiver_sampler(&cfg, Receiver::Eavesdropper).unwrap();
        let best = simulate_best_port(&cfg).unwrap();
        let base = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (mut gr, mut ge, mut scratch) = (vec![0.0; 8], vec![0.0; 8], vec![0.0; 16]);
        for (t, s) in best.iter().enumerate() {
            let mut rng = trial_rng(&base, t);
            legit.sample_into(&mut rng, &mut gr, &mut scratch);
            eaves.sample_into(&mut rng, &mut ge, &mut scratch);
            assert!(gr.iter().all(|&g| g <= s.gamma_r_star));
            assert!(gr.contains(&s.gamma_r_star));
            assert!(ge.iter().all(|&g| g <= s.gamma_e_star));
        }
    }

    #[test]
    fn single_port_best_equals_port_gain() {
        let cfg = small_config(ScenarioKind::NoFas, 200);
        let legit = receiver_sampler(&cfg, Receiver::Legitimate).unwrap();
        assert_eq!(legit.n_ports(), 1);
        let best = simulate_best_port(&cfg).unwrap();
        let base = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (mut g, mut scratch) = (vec![0.0; 1], vec![0.0; 2]);
        for (t, s) in best.iter().enumerate() {
            let mut rng = trial_rng(&base, t);
            legit.sample_into(&mut rng, &mut g, &mut scratch);
            assert_eq!(g[0], s.gamma_r_star);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = small_config(ScenarioKind::FasRis, 3_000);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_best_port(&cfg).unwrap());
        let b = four.install(|| simulate_best_port(&cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(simulate_best_port(&cfg).unwrap(), a);
    }

    #[test]
    fn asc_vanishes_with_vanishing_snr() {
        let mut cfg = small_config(ScenarioKind::FasRis, 5_000);
        cfg.system.snr_r_db = -80.0;
        cfg.system.snr_e_db = -80.0;
        let est = estimate_asc(&cfg).unwrap();
        assert!(est.value.abs() <= est.half_width_95.max(1e-6));
    }

    #[test]
    fn ci_halves_when_trials_quadruple() {
        let cfg = small_config(ScenarioKind::FasRis, 4_000);
        let mut big = cfg.clone();
        big.trials = 16_000;
        let a = estimate_asc(&cfg).unwrap();
        let b = estimate_asc(&big).unwrap();
        let ratio = a.half_width_95 / b.half_width_95;
        assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
        // doubling trials shrinks by √2
        let mut double = cfg.clone();
        double.trials = 8_000;
        let c = estimate_asc(&double).unwrap();
        let r2 = a.half_width_95 / c.half_width_95;
        assert!((r2 - 2f64.sqrt()).abs() <= 0.2 * 2f64.sqrt(), "ratio {r2}");
    }

    #[test]
    fn sop_edges() {
        let cfg = small_config(ScenarioKind::FasRis, 2_000);
        let samples = simulate_best_port(&cfg).unwrap();
        let (sr, se) = (cfg.system.snr_r(), cfg.system.snr_e());
        let below = samples.iter().filter(|s| rate(s.gamma_r_star, sr) < rate(s.gamma_e_star, se)).count();
        assert_eq!(sop_from_samples(&samples, sr, se, 0.0).value, below as f64 / samples.len() as f64);
        let all = sop_from_samples(&samples, sr, se, 50.0);
        assert_eq!(all.value, 1.0);
        assert!(!all.low_confidence);
        assert!(sop_from_samples(&samples, sr, se, 1e-6).value >= sop_from_samples(&samples, sr, se, 0.0).value);
    }

    #[test]
    fn direct_link_power_matches_cascade_budget() {
        let link = LinkStats::new(0.5, 0.5, 40).unwrap();
        let s = PortSampler::direct(&link, &corr(1, 0.0)).unwrap();
        let g = s.sample_trials(200_000, 4);
        let power = mean_var(g.iter().map(|x| x * x)).mean;
        assert_abs_diff_eq!(power, 40.0 * 0.25, epsilon = 0.1);
    }

    #[test]
    fn samples_csv_layout() {
        let cfg = small_config(ScenarioKind::FasRis, 3);
        let samples = simulate_best_port(&cfg).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&samples, 10.0, 2.5, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("trial,gamma_r_star,gamma_e_star,c_s"));
        assert_eq!(lines.count(), 3);
    }
}
