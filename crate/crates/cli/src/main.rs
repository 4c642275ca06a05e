//! `feitsim`: run the Floquet-EIT spectrum and protocol computations from a
//! configuration file and write CSV tables with matching gnuplot scripts.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use feitsim_core::config::{parse_config, ConfigError, DopplerKind, RunConfig};

use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "feitsim", version, about = "Floquet-EIT Rydberg interferometry simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, clap::Args)]
struct CommonArgs {
    /// Configuration file; every key falls back to its default when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `run.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte-Carlo seed, overriding `noise.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Switch the velocity average to Gauss-Hermite of this order.
    #[arg(long, global = true)]
    quadrature_order: Option<usize>,
    /// Worker threads for the parallel sweeps.
    #[arg(long, global = true, env = "FEITSIM_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Subcommand)]
pub enum Command {
    /// Transmission against control detuning, per band and summed.
    Spectrum,
    /// T₋₁ − T₁ against the RF phase.
    PhaseScan,
    /// T₁ − T₋₁ over one period of the detuned modulation.
    TimeTrace,
    /// Oscillation contrast against the RF amplitude.
    AmplitudeScan,
    /// Monte-Carlo phase or amplitude accuracy, per `run.accuracy`.
    Accuracy,
    /// Solve for α/(2πħ) from a target Stark shift at the configured fields.
    CalibrateAlpha {
        /// Target ω_α/2π in MHz.
        #[arg(long, default_value_t = -51.6, allow_negative_numbers = true)]
        target_mhz: f64,
    },
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::PhaseScan => "phase-scan",
            Command::TimeTrace => "time-trace",
            Command::AmplitudeScan => "amplitude-scan",
            Command::Accuracy => "accuracy",
            Command::CalibrateAlpha { .. } => "calibrate-alpha",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Computation(#[from] feitsim_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Computation(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Computation(_) => "computation",
            CliError::Io { .. } => "io",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    fn from_config(file: &str, e: ConfigError) -> Self {
        CliError::Config(format!("{file}:{e}"))
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_config(&text).map_err(|e| CliError::from_config(&path.display().to_string(), e))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(order) = args.quadrature_order {
        config.doppler = DopplerKind::GaussHermite;
        config.quadrature_order = order;
    }
    config
        .validate()
        .map_err(|e| CliError::from_config("<command line>", e))?;
    Ok(config)
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads(cli.common.threads)?;
    let config = load_config(&cli.common)?;
    let out = OutputDir::acquire(&config.out_dir)?;
    let artifact = commands::execute(cli.command, &config)?;
    out.write(&format!("{}.csv", cli.command.name()), &artifact.csv)?;
    out.write(&format!("{}.gp", cli.command.name()), artifact.gnuplot.as_bytes())?;
    out.write("metadata.txt", commands::metadata(cli.command, &config)?.as_bytes())?;
    for line in &artifact.summary {
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error: kind={} code={} command={} message={:?}",
                e.kind(),
                e.code(),
                cli.command.name(),
                e.to_string()
            );
            ExitCode::from(e.code())
        }
    }
}
