use feitsim_core::config::{AccuracyTarget, RunConfig};
use feitsim_core::floquet::{calibrate_alpha, check_rwa};
use feitsim_core::protocols::{
    amplitude_accuracy, amplitude_scan, eit_amplitude_scan, period_grid, phase_accuracy, phase_scan,
    time_trace, ScanResult,
};
use feitsim_core::spectroscopy::{sweep_spectrum, Experiment, Scheme};
use feitsim_core::{angular_to_mhz, mhz_to_angular, TWO_PI};

use crate::{CliError, Command};

/// Everything a subcommand produces besides `metadata.txt`.
pub struct Artifact {
    pub csv: Vec<u8>,
    pub gnuplot: String,
    pub summary: Vec<String>,
}

fn experiment(config: &RunConfig) -> Result<Experiment, CliError> {
    config
        .experiment()
        .map_err(|e| CliError::Config(format!("cannot build the experiment: {e}")))
}

fn csv_bytes<E: std::fmt::Display>(write: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| CliError::io("<csv buffer>", std::io::Error::other(e.to_string())))?;
    Ok(buf)
}

pub fn execute(command: Command, config: &RunConfig) -> Result<Artifact, CliError> {
    match command {
        Command::Spectrum => spectrum(config),
        Command::PhaseScan => {
            let scan = phase_scan(&experiment(config)?, &config.phase_grid())?;
            scan_artifact(command, scan, "RF phase {/Symbol F}_s (rad)", "($1)", false)
        }
        Command::TimeTrace => {
            let delta = config.delta_omega();
            let grid = period_grid(delta, config.time_points)?;
            let scan = time_trace(&experiment(config)?, delta, &grid)?;
            scan_artifact(command, scan, "time (ms)", "($1*1e3)", false)
        }
        Command::AmplitudeScan => {
            let exp = experiment(config)?;
            let scan = match config.scheme {
                Scheme::Feit => amplitude_scan(&exp, config.delta_omega(), &config.eps_grid(), config.period_points)?,
                Scheme::Eit => eit_amplitude_scan(&exp, &config.eps_grid())?,
            };
            scan_artifact(command, scan, "RF amplitude (V/cm)", "($1)", false)
        }
        Command::Accuracy => accuracy(config),
        Command::CalibrateAlpha { target_mhz } => calibrate(config, target_mhz),
    }
}

fn spectrum(config: &RunConfig) -> Result<Artifact, CliError> {
    let exp = experiment(config)?;
    let grid = config
        .detuning_grid()
        .map_err(|e| CliError::Config(format!("detuning grid: {e}")))?;
    let bands = config
        .bands()
        .map_err(|e| CliError::Config(format!("band range: {e}")))?;
    let result = sweep_spectrum(&exp, config.scheme, &grid, bands, None)?;
    let csv = csv_bytes(|buf| result.write_csv(buf, config.product_column))?;
    let peak = result.detuning_grid[result.argmax_total()] / TWO_PI / 1e6;
    let last_column = 2 + bands.len();
    let gnuplot = format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'control detuning {{/Symbol D}}_c/2{{/Symbol p}} (MHz)'\n\
         set ylabel 'transmission'\n\
         plot for [i=2:{last_column}] 'spectrum.csv' using ($1/1e6):i with lines\n"
    );
    Ok(Artifact {
        csv,
        gnuplot,
        summary: vec![
            format!("scheme = {}", config.scheme.name()),
            format!("points = {}", grid.len()),
            format!("total_peak_mhz = {peak}"),
        ],
    })
}

fn scan_artifact(
    command: Command,
    scan: ScanResult,
    xlabel: &str,
    xexpr: &str,
    logscale: bool,
) -> Result<Artifact, CliError> {
    let csv = csv_bytes(|buf| scan.write_csv(buf))?;
    let name = command.name();
    let log = if logscale { "set logscale y\n" } else { "" };
    let errorbars = if scan.sigma.is_some() && !logscale {
        format!(", '{name}.csv' using {xexpr}:2:3 with yerrorbars notitle")
    } else {
        String::new()
    };
    let gnuplot = format!(
        "# {tag}\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel '{xlabel}'\n\
         set ylabel '{tag}'\n\
         {log}plot '{name}.csv' using {xexpr}:2 with linespoints{errorbars}\n",
        tag = scan.tag,
    );
    Ok(Artifact {
        csv,
        gnuplot,
        summary: vec![format!("tag = {}", scan.tag), format!("points = {}", scan.abscissa.len())],
    })
}

fn accuracy(config: &RunConfig) -> Result<Artifact, CliError> {
    let exp = experiment(config)?;
    let noise = config.noise();
    let (curve, xlabel) = match config.accuracy {
        AccuracyTarget::Phase => (
            phase_accuracy(&exp, &config.phase_grid(), &noise)?,
            "RF phase {/Symbol F}_s (rad)",
        ),
        AccuracyTarget::Amplitude => (
            amplitude_accuracy(
                &exp,
                config.scheme,
                config.delta_omega(),
                &config.accuracy_eps_grid(),
                config.period_points,
                &noise,
            )?,
            "RF amplitude (V/cm)",
        ),
    };
    let mut artifact = scan_artifact(Command::Accuracy, curve.to_scan(), xlabel, "($1)", true)?;
    if let Some((i, best)) = curve.minimum() {
        artifact.summary.push(format!("minimum = {best:e} at {}", curve.abscissa[i]));
    }
    if !curve.richardson_ok.iter().all(|&ok| ok) {
        log::warn!("half-step derivative check disagreed by more than 1% at some points");
    }
    Ok(artifact)
}

fn calibrate(config: &RunConfig, target_mhz: f64) -> Result<Artifact, CliError> {
    if !target_mhz.is_finite() {
        return Err(CliError::Config(format!("target must be finite, got {target_mhz}")));
    }
    let drive = config
        .drive()
        .map_err(|e| CliError::Config(format!("drive: {e}")))?;
    let alpha = calibrate_alpha(&drive, mhz_to_angular(target_mhz))?;
    let alpha_mhz = angular_to_mhz(alpha);
    let csv = format!(
        "target_stark_shift_mhz,alpha_mhz_per_v2_cm2\r\n{target_mhz:.16e},{alpha_mhz:.16e}\r\n"
    )
    .into_bytes();
    let gnuplot = "set datafile separator ','\n\
                   stats 'calibrate-alpha.csv' using 2 nooutput\n\
                   print sprintf('alpha/(2 pi hbar) = %.6f MHz/(V/cm)^2', STATS_max)\n"
        .to_string();
    Ok(Artifact {
        csv,
        gnuplot,
        summary: vec![format!("medium.alpha_mhz_per_v2_cm2 = {alpha_mhz}")],
    })
}

/// Resolved configuration with the RWA report as comments; parses back to
/// the same configuration.
pub fn metadata(command: Command, config: &RunConfig) -> Result<String, CliError> {
    let exp = experiment(config)?;
    let modulation = (command != Command::Spectrum || config.scheme == Scheme::Feit).then_some(&exp.modulation);
    let report = check_rwa(&exp.drive, modulation, &exp.medium, &exp.lasers);
    for w in report.warnings() {
        log::warn!("rotating-wave condition weak: {} = {:.3}", w.name, w.value);
    }
    let mut text = format!(
        "# feitsim {} {}\n# doppler: {}\n",
        env!("CARGO_PKG_VERSION"),
        command.name(),
        exp.doppler.describe()
    );
    for line in report.to_string().lines() {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(&config.render());
    Ok(text)
}
