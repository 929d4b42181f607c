use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use ionphase::heterodyne::{fold_histogram, sample_detections};
use ionphase::phase_estimation::fit_cosine;
use ionphase::pipeline::{parse_config, simulate_sweep, sweep_csv_string, theory_curve, Corrections, ExperimentConfig, SweepRow};
use ionphase::TdcHistogram;

/// Phase shift of a weak laser beam by a single trapped ion: theory curves,
/// simulated heterodyne measurements and histogram fits.
#[derive(Debug, Parser)]
#[command(name = "ionphase", version)]
struct Cli {
    /// Experiment configuration (`key = value` lines); built-in defaults when absent.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// `none`, `all`, or a comma list of `motion`, `saturation`, `sideband_reference`; overrides the configuration.
    #[arg(long, global = true, value_parser = parse_corrections)]
    corrections: Option<Corrections>,

    /// Worker threads for sweeps; output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Theory phase versus detuning with the coupling uncertainty band, as CSV.
    TheoryCurve,
    /// Theory plus simulated bright/dark measurements at every grid point, as CSV.
    SimulateSweep,
    /// Fit a TDC histogram CSV (`bin_start_s,count`) at the configured beat frequency.
    Fit {
        histogram: PathBuf,
    },
    /// Theory band and simulated points for the published parameter set.
    ReproduceFig3,
    /// Simulate one acquisition and write its folded histogram CSV.
    SimulateRun {
        /// Atom phase added to the instrumental phase, rad.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true, conflicts_with = "dark")]
        phase_rad: f64,
        /// Simulate the dark reference run instead.
        #[arg(long)]
        dark: bool,
        /// Also write the raw detection times to this file.
        #[arg(long, value_name = "PATH")]
        record: Option<PathBuf>,
    },
}

fn parse_corrections(s: &str) -> Result<Corrections, String> {
    s.parse()
}

/// Bad invocation that clap cannot detect on its own.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match err.downcast_ref::<ionphase::Error>() {
        Some(e) if e.is_validation() => 1,
        _ => 2,
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(c) = cli.corrections {
        config.corrections = c;
    }
    config.validate()?;
    Ok(config)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| ionphase::Error::Io { path: path.to_path_buf(), source })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn sweep(config: &ExperimentConfig, threads: Option<usize>) -> anyhow::Result<Vec<SweepRow>> {
    match threads {
        Some(0) => Err(Usage("--threads must be at least 1".into()).into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(|| simulate_sweep(config))?)
        }
        None => Ok(simulate_sweep(config)?),
    }
}

fn summarize(rows: &[SweepRow]) {
    let peak = rows
        .iter()
        .max_by(|a, b| a.theory_phase_central.total_cmp(&b.theory_phase_central));
    if let Some(r) = peak {
        eprintln!(
            "largest theory phase {:.3}° (band {:.3}°..{:.3}°) at Δ = {}Γ",
            r.theory_deg(),
            r.theory_lo_deg(),
            r.theory_hi_deg(),
            r.detuning_gamma
        );
    }
    for r in rows {
        let sim = match (r.sim_deg(), r.sim_err_deg()) {
            (Some(p), Some(e)) => format!("{p:8.3}° ± {e:.3}°"),
            _ => "       --".to_string(),
        };
        let flags = if r.flags.is_empty() { String::new() } else { format!("  [{}]", r.flags) };
        eprintln!("Δ = {:6.2}Γ  theory {:7.3}°  simulated {sim}{flags}", r.detuning_gamma, r.theory_deg());
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::TheoryCurve => {
            let config = load_config(&cli)?;
            emit(out, &sweep_csv_string(&theory_curve(&config)?))
        }
        Command::SimulateSweep => {
            let config = load_config(&cli)?;
            emit(out, &sweep_csv_string(&sweep(&config, cli.threads)?))
        }
        Command::Fit { histogram } => {
            let config = load_config(&cli)?;
            let hist = TdcHistogram::load(histogram)?;
            let fit = fit_cosine(&hist, config.heterodyne.beat_frequency)
                .with_context(|| format!("fitting {}", histogram.display()))?;
            emit(out, &fit.to_record())
        }
        Command::ReproduceFig3 => {
            if cli.config.is_some() {
                return Err(Usage("reproduce-fig3 uses the built-in parameter set; drop --config".into()).into());
            }
            let config = load_config(&cli)?;
            let rows = sweep(&config, cli.threads)?;
            emit(out, &sweep_csv_string(&rows))?;
            eprintln!(
                "G = {} ± {}, Γ/2π = {} MHz, corrections: {}, seed {}",
                config.coupling_central,
                config.coupling_uncertainty,
                config.linewidth() / std::f64::consts::TAU / 1e6,
                config.corrections,
                config.seed
            );
            summarize(&rows);
            Ok(())
        }
        Command::SimulateRun { phase_rad, dark, record } => {
            let config = load_config(&cli)?;
            let (het, phase) = if *dark {
                (config.heterodyne.dark_run(), config.heterodyne.instrumental_phase)
            } else {
                (config.heterodyne, config.heterodyne.instrumental_phase + phase_rad)
            };
            let detections = sample_detections(&het, phase, config.seed)?;
            if let Some(path) = record {
                detections.save(path)?;
            }
            let hist = fold_histogram(&detections, &het)?;
            emit(out, &hist.to_csv())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
