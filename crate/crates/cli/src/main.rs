use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use fasris_core::experiment::{fit_blocks_cmd, run_sweep, validate, AnalyticModel, Metric, SweepSpec, SweepVar};
use fasris_core::montecarlo::{asc_from_samples, simulate_best_port, sop_from_samples, write_samples_csv};
use fasris_core::{ScenarioKind, SimulationConfig, SystemConfig};

/// Secrecy analysis of FAS receivers behind an RIS: closed-form ASC/SOP and
/// a Monte Carlo reference.
#[derive(Parser, Debug)]
#[command(name = "fasris", version)]
struct Cli {
    #[command(flatten)]
    system: SystemArgs,

    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the defaults and `--config`, in that order.
#[derive(Args, Debug, Default)]
struct SystemArgs {
    /// key = value file; see `SystemConfig` keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n_ports: Option<String>,
    #[arg(long, global = true)]
    aperture: Option<String>,
    #[arg(long, global = true)]
    elements: Option<String>,
    #[arg(long, global = true)]
    eps1_r: Option<String>,
    #[arg(long, global = true)]
    eps2_r: Option<String>,
    #[arg(long, global = true)]
    eps1_e: Option<String>,
    #[arg(long, global = true)]
    eps2_e: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr_r_db: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr_e_db: Option<String>,
    #[arg(long, global = true)]
    target_rate: Option<String>,
    #[arg(long, global = true)]
    lambda_th: Option<String>,
    #[arg(long, global = true)]
    u_l: Option<String>,
    #[arg(long, global = true)]
    u_p: Option<String>,
    #[arg(long, global = true)]
    sigmas: Option<String>,
    /// corrected | paper_literal
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    trials: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
}

impl SystemArgs {
    fn resolve(&self) -> anyhow::Result<SystemConfig> {
        let mut cfg = SystemConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_kv_str(&text)
                .with_context(|| format!("in {}", path.display()))?;
        }
        let overrides = [
            ("n_ports", &self.n_ports),
            ("aperture", &self.aperture),
            ("elements", &self.elements),
            ("eps1_r", &self.eps1_r),
            ("eps2_r", &self.eps2_r),
            ("eps1_e", &self.eps1_e),
            ("eps2_e", &self.eps2_e),
            ("snr_r_db", &self.snr_r_db),
            ("snr_e_db", &self.snr_e_db),
            ("target_rate", &self.target_rate),
            ("lambda_th", &self.lambda_th),
            ("u_l", &self.u_l),
            ("u_p", &self.u_p),
            ("sigmas", &self.sigmas),
            ("mode", &self.mode),
            ("trials", &self.trials),
            ("seed", &self.seed),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Average secrecy capacity
    Asc(MetricArgs),
    /// Secrecy outage probability
    Sop(MetricArgs),
    /// Sweep one parameter and write a CSV table
    Sweep(SweepArgs),
    /// Analytical-vs-simulation check battery
    Validate {
        /// Exit nonzero when any check fails
        #[arg(long)]
        strict: bool,
    },
    /// Fit the block-correlation model and dump the eigen-spectrum
    FitBlocks {
        /// Spectrum CSV destination
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw best-port gains and write per-trial samples
    Simulate {
        #[arg(long, default_value = "fas_ris")]
        scenario: ScenarioKind,
        /// Sample CSV destination (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct MetricArgs {
    #[arg(long, default_value = "fas_ris")]
    scenario: ScenarioKind,
    /// Also report the Monte Carlo estimate
    #[arg(long)]
    mc: bool,
    /// Skip the closed form
    #[arg(long)]
    mc_only: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// snr_r_db | snr_e_db | M | N | R_s
    #[arg(long)]
    var: SweepVar,
    /// Comma list (0,5,10) or inclusive range start:stop:step
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    /// Comma list of asc_analytical, asc_mc, sop_analytical, sop_mc
    #[arg(long, default_value = "asc_analytical,asc_mc,sop_analytical,sop_mc")]
    outputs: String,
    #[arg(long, default_value = "fas_ris")]
    scenarios: String,
    /// Drop Monte Carlo outputs
    #[arg(long)]
    analytical_only: bool,
    /// CSV destination (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_values(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let [start, stop, step] = [parts[0], parts[1], parts[2]]
            .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad range component `{p}`")));
        let (start, stop, step) = (start?, stop?, step?);
        if step.is_nan() || step <= 0.0 {
            bail!("range step must be positive");
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            bail!("empty range `{text}`");
        }
        return Ok((0..=count as usize).map(|i| start + step * i as f64).collect());
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad sweep value `{p}`")))
        .collect()
}

fn parse_list<T: std::str::FromStr>(text: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    text.split(',')
        .map(|p| p.trim().parse::<T>().map_err(anyhow::Error::from))
        .collect()
}

fn writer(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn metric(cfg: &SystemConfig, args: &MetricArgs, asc: bool) -> anyhow::Result<()> {
    let name = if asc { "asc" } else { "sop" };
    // Direct-link scenarios have no closed form and fall back to simulation.
    let analytical = !args.mc_only && args.scenario.has_ris();
    if analytical {
        let model = AnalyticModel::new(cfg, args.scenario)?;
        let v = if asc { model.asc(cfg)? } else { model.sop(cfg)? };
        println!("{name}_analytical={v}");
    }
    if args.mc || !analytical {
        let samples = simulate_best_port(&SimulationConfig::new(cfg.clone(), args.scenario))?;
        let est = if asc {
            asc_from_samples(&samples, cfg.snr_r(), cfg.snr_e())
        } else {
            sop_from_samples(&samples, cfg.snr_r(), cfg.snr_e(), cfg.target_rate)
        };
        println!("{name}_mc={}", est.value);
        println!("{name}_mc_ci95=[{}, {}]", est.lower, est.upper);
        if est.low_confidence {
            log::warn!("fewer than 20 outage events; the SOP estimate is low-confidence");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let cfg = cli.system.resolve()?;
    match cli.command {
        Command::Asc(args) => metric(&cfg, &args, true)?,
        Command::Sop(args) => metric(&cfg, &args, false)?,
        Command::Sweep(args) => {
            let mut outputs: Vec<Metric> = parse_list(&args.outputs)?;
            if args.analytical_only {
                outputs.retain(|m| matches!(m, Metric::AscAnalytical | Metric::SopAnalytical));
            }
            let spec = SweepSpec {
                variable: args.var,
                values: parse_values(&args.values)?,
                outputs,
                scenarios: parse_list(&args.scenarios)?,
            };
            let table = run_sweep(&spec, &cfg)?;
            let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
            table.write_csv(writer(args.out.as_deref())?)?;
            if failed > 0 {
                log::warn!("{failed} sweep rows carry errors");
            }
        }
        Command::Validate { strict } => {
            let report = validate(&cfg)?;
            println!("{report}");
            if strict && !report.all_passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::FitBlocks { out } => {
            let report = fit_blocks_cmd(&cfg)?;
            println!("{report}");
            if let Some(path) = out {
                report.matrix.write_spectrum_csv(writer(Some(&path))?)?;
            }
        }
        Command::Simulate { scenario, out } => {
            let samples = simulate_best_port(&SimulationConfig::new(cfg.clone(), scenario))?;
            write_samples_csv(&samples, cfg.snr_r(), cfg.snr_e(), writer(out.as_deref())?)?;
            let asc = asc_from_samples(&samples, cfg.snr_r(), cfg.snr_e());
            let sop = sop_from_samples(&samples, cfg.snr_r(), cfg.snr_e(), cfg.target_rate);
            eprintln!("asc_mc={} ± {}", asc.value, asc.half_width_95);
            eprintln!("sop_mc={} ± {}", sop.value, sop.half_width_95);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {}", e.kind());
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
