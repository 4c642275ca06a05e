//! Measurement procedures built on the band peak transmissions.
//!
//! * Phase: with `ω_g = ω_s` the contrast `T₋₁ − T₁` is a monotone function
//!   of `Φ_s` on `[0, π]`, mirrored on `[π, 2π]`. Inverting it leaves the
//!   pair `{Φ*, 2π − Φ*}`; a slightly detuned modulation makes the contrast
//!   oscillate in time, and the direction of that oscillation picks the
//!   right member of the pair.
//! * Amplitude: the peak-to-peak size of the detuned oscillation grows with
//!   `ε_rf` up to a turnover; the EIT reference reads `T₋₁(ε_rf) − T₋₁(0)`.
//! * Accuracy: a Monte-Carlo spread of the observable divided by its slope.
//!
//! Each Monte-Carlo sample `i` draws from its own ChaCha stream `(seed, i)`,
//! so results do not depend on how samples are scheduled over threads.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::{commensurate_ratio, BandRange, CouplingSet};
use crate::spectroscopy::{
    format_error, format_float, locked_transmission, parse_float, Experiment, Perturbation, Scheme,
};
use crate::units::{circular_distance, TWO_PI};

use std::f64::consts::PI;

/// Gaussian jitter applied once per spectrum acquisition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Relative 1σ spread of `Ω_c`.
    pub control_rel_sigma: f64,
    /// 1σ jitter of each laser frequency, rad/s.
    pub laser_freq_sigma: f64,
    /// Correlation between probe and control jitter, in `[-1, 1]`.
    pub correlation: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            control_rel_sigma: 0.01,
            laser_freq_sigma: TWO_PI * 100e3,
            correlation: 0.0,
            samples: 10_000,
            seed: 0x5eed,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            control_rel_sigma: 0.0,
            laser_freq_sigma: 0.0,
            ..NoiseModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.control_rel_sigma.is_finite() && self.control_rel_sigma >= 0.0) {
            return Err(Error::param("noise.omega_c_rel_sigma must be >= 0"));
        }
        if !(self.laser_freq_sigma.is_finite() && self.laser_freq_sigma >= 0.0) {
            return Err(Error::param("noise.laser_freq_sigma must be >= 0"));
        }
        if !(self.correlation.is_finite() && self.correlation.abs() <= 1.0) {
            return Err(Error::param("noise.correlation must lie in [-1, 1]"));
        }
        if self.samples < 2 {
            return Err(Error::param(format!("noise.samples must be >= 2, got {}", self.samples)));
        }
        Ok(())
    }

    fn rng(&self, sample: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample as u64);
        rng
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Perturbation {
        let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let rho = self.correlation;
        Perturbation {
            control_scale: 1.0 + self.control_rel_sigma * z[0],
            probe_shift: self.laser_freq_sigma * z[1],
            control_shift: self.laser_freq_sigma * (rho * z[1] + (1.0 - rho * rho).sqrt() * z[2]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    /// `T₋₁ − T₁`
    LowerMinusUpper,
    /// `T₁ − T₋₁`
    UpperMinusLower,
    /// Amplitude contrast `ΔT`.
    Contrast,
    PhaseAccuracy,
    AmplitudeAccuracy,
}

impl ObservableKind {
    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::LowerMinusUpper => "t_m1_minus_t_1",
            ObservableKind::UpperMinusLower => "t_1_minus_t_m1",
            ObservableKind::Contrast => "delta_t",
            ObservableKind::PhaseAccuracy => "delta_phi_s",
            ObservableKind::AmplitudeAccuracy => "delta_eps_rf",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        [
            ObservableKind::LowerMinusUpper,
            ObservableKind::UpperMinusLower,
            ObservableKind::Contrast,
            ObservableKind::PhaseAccuracy,
            ObservableKind::AmplitudeAccuracy,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanTag {
    pub observable: ObservableKind,
    pub scheme: Scheme,
}

impl std::fmt::Display for ScanTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.observable.name(), self.scheme.name())
    }
}

/// One protocol curve: an observable against a strictly increasing
/// abscissa (phase in rad, field in V/cm, or time in s).
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub abscissa: Vec<f64>,
    pub observable: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
    pub tag: ScanTag,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    /// `# tag: …` line, then `abscissa,observable[,sigma]`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), csv::Error> {
        write!(out, "# tag: {}\r\n", self.tag)?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        if self.sigma.is_some() {
            w.write_record(["abscissa", "observable", "sigma"])?;
        } else {
            w.write_record(["abscissa", "observable"])?;
        }
        for j in 0..self.abscissa.len() {
            let mut row = vec![format_float(self.abscissa[j]), format_float(self.observable[j])];
            if let Some(s) = &self.sigma {
                row.push(format_float(s[j]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parse a CSV produced by [`ScanResult::write_csv`].
pub fn parse_scan_csv(text: &str) -> Result<ScanResult> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let tag_text = first
        .trim_end_matches('\r')
        .strip_prefix("# tag: ")
        .ok_or_else(|| format_error(1, "first line must be '# tag: <observable>/<scheme>'"))?;
    let (obs, scheme) = tag_text
        .split_once('/')
        .ok_or_else(|| format_error(1, "tag must read <observable>/<scheme>"))?;
    let tag = ScanTag {
        observable: ObservableKind::from_name(obs)
            .ok_or_else(|| format_error(1, format!("unknown observable {obs:?}")))?,
        scheme: scheme.parse().map_err(|e: Error| format_error(1, e.to_string()))?,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(rest.as_bytes());
    let header = reader.headers().map_err(|e| format_error(2, e.to_string()))?.clone();
    let with_sigma = match header.iter().collect::<Vec<_>>().as_slice() {
        ["abscissa", "observable"] => false,
        ["abscissa", "observable", "sigma"] => true,
        _ => return Err(format_error(2, "header must be abscissa,observable[,sigma]")),
    };
    let mut scan = ScanResult {
        abscissa: Vec::new(),
        observable: Vec::new(),
        sigma: with_sigma.then(Vec::new),
        tag,
    };
    for (row, record) in reader.records().enumerate() {
        let line = row + 3;
        let record = record.map_err(|e| format_error(line, e.to_string()))?;
        scan.abscissa.push(parse_float(&record[0], line)?);
        scan.observable.push(parse_float_or_inf(&record[1], line)?);
        if let Some(s) = &mut scan.sigma {
            s.push(parse_float(&record[2], line)?);
        }
    }
    if scan.abscissa.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(format_error(0, "abscissa must be strictly increasing"));
    }
    Ok(scan)
}

/// Accuracy curves carry `inf` where the slope vanishes.
fn parse_float_or_inf(field: &str, line: usize) -> Result<f64> {
    match field.trim() {
        "inf" => Ok(f64::INFINITY),
        other => parse_float(other, line),
    }
}

fn validate_abscissa(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(format!("{what} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::param(format!("{what} grid has non-finite entries")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param(format!("{what} grid must be strictly increasing")));
    }
    Ok(())
}

/// `Φ_k = 2πk/n`, `k = 0..n`; closed under `Φ → 2π − Φ`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TWO_PI * k as f64 / n as f64).collect()
}

/// `n ≥ 2` evenly spaced phases covering `[0, π]` inclusive.
pub fn half_phase_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| if k + 1 == n { PI } else { PI * k as f64 / (n - 1) as f64 })
        .collect()
}

/// One detuning period sampled at `points` instants, `t ∈ [0, 2π/|δ_ω|)`.
pub fn period_grid(delta_omega: f64, points: usize) -> Result<Vec<f64>> {
    if !(delta_omega.is_finite() && delta_omega != 0.0) {
        return Err(Error::param("delta_omega must be finite and non-zero"));
    }
    if points < 2 {
        return Err(Error::param("a period grid needs at least 2 points"));
    }
    let period = TWO_PI / delta_omega.abs();
    Ok((0..points).map(|j| period * j as f64 / points as f64).collect())
}

/// Copy of `experiment` whose modulation runs at `ω_g = (ω_s − δ_ω)/L`,
/// `L` taken from the commensurate template.
pub fn detuned_experiment(experiment: &Experiment, delta_omega: f64) -> Result<Experiment> {
    let omega_s = experiment.drive.omega_s();
    let l = commensurate_ratio(omega_s, experiment.modulation.omega_g())?;
    let omega_g = (omega_s - delta_omega) / l as f64;
    let mut out = experiment.clone();
    out.modulation = experiment.modulation.with_omega_g(omega_g)?;
    Ok(out)
}

fn first_bands() -> BandRange {
    BandRange::symmetric(1)
}

/// What one Monte-Carlo sample measures. Each entry of `acquisitions` is a
/// separate spectrum and gets its own noise draw.
enum Plan {
    /// `T₋₁ − T₁` from one spectrum.
    Contrast(CouplingSet),
    /// `max − min` of `T₋₁ − T₁` over a detuning period, one spectrum per instant.
    Oscillation(Vec<CouplingSet>),
    /// `T₋₁` with RF minus `T₋₁` without, two spectra.
    EitReference { with_rf: CouplingSet, without_rf: CouplingSet },
}

impl Plan {
    fn evaluate(&self, e: &Experiment, mut draw: impl FnMut() -> Perturbation) -> Result<f64> {
        let t = |c: &CouplingSet, n: i32, p: &Perturbation| {
            locked_transmission(c, n, &e.medium, &e.lasers, &e.doppler, p)
        };
        match self {
            Plan::Contrast(c) => {
                let p = draw();
                Ok(t(c, -1, &p)? - t(c, 1, &p)?)
            }
            Plan::Oscillation(sets) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for c in sets {
                    let p = draw();
                    let v = t(c, -1, &p)? - t(c, 1, &p)?;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                Ok(hi - lo)
            }
            Plan::EitReference { with_rf, without_rf } => {
                let a = t(with_rf, -1, &draw())?;
                let b = t(without_rf, -1, &draw())?;
                Ok(a - b)
            }
        }
    }

    fn noiseless(&self, e: &Experiment) -> Result<f64> {
        self.evaluate(e, Perturbation::default)
    }
}

/// A scalar protocol observable at the experiment's current drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    /// `T₋₁ − T₁` with the commensurate modulation.
    PhaseContrast,
    /// Peak-to-peak of the detuned `T₋₁ − T₁` oscillation.
    FeitContrast { delta_omega: f64, points: usize },
    /// `T₋₁|ε_rf − T₋₁|ε_rf=0` with EIT couplings.
    EitContrast,
}

impl Observable {
    fn plan(&self, e: &Experiment) -> Result<Plan> {
        let bands = first_bands();
        match *self {
            Observable::PhaseContrast => Ok(Plan::Contrast(e.couplings(Scheme::Feit, bands, None)?)),
            Observable::FeitContrast { delta_omega, points } => {
                let detuned = detuned_experiment(e, delta_omega)?;
                let sets = period_grid(delta_omega, points)?
                    .into_iter()
                    .map(|t| detuned.couplings(Scheme::Feit, bands, Some(t)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Plan::Oscillation(sets))
            }
            Observable::EitContrast => {
                let mut off = e.clone();
                off.drive = e.drive.with_eps_rf(0.0)?;
                Ok(Plan::EitReference {
                    with_rf: e.couplings(Scheme::Eit, bands, None)?,
                    without_rf: off.couplings(Scheme::Eit, bands, None)?,
                })
            }
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            Observable::EitContrast => Scheme::Eit,
            _ => Scheme::Feit,
        }
    }

    /// Value without noise.
    pub fn evaluate(&self, e: &Experiment) -> Result<f64> {
        self.plan(e)?.noiseless(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloStats {
    pub mean: f64,
    /// Unbiased sample standard deviation.
    pub std: f64,
}

pub fn monte_carlo_observable(
    observable: &Observable,
    experiment: &Experiment,
    noise: &NoiseModel,
) -> Result<MonteCarloStats> {
    noise.validate()?;
    let plan = observable.plan(experiment)?;
    let values = (0..noise.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = noise.rng(i);
            plan.evaluate(experiment, || noise.draw(&mut rng))
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloStats { mean, std: var.sqrt() })
}

/// `T₋₁ − T₁` for each phase of `phi_grid` (commensurate modulation).
pub fn phase_scan(experiment: &Experiment, phi_grid: &[f64]) -> Result<ScanResult> {
    validate_abscissa(phi_grid, "phase")?;
    if phi_grid[0] < 0.0 || *phi_grid.last().unwrap() >= TWO_PI {
        return Err(Error::param("phase grid must lie in [0, 2pi)"));
    }
    commensurate_ratio(experiment.drive.omega_s(), experiment.modulation.omega_g())?;
    let observable = phi_grid
        .par_iter()
        .map(|&phi| {
            let mut e = experiment.clone();
            e.drive = e.drive.with_phase(phi);
            Observable::PhaseContrast.evaluate(&e)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScanResult {
        abscissa: phi_grid.to_vec(),
        observable,
        sigma: None,
        tag: ScanTag {
            observable: ObservableKind::LowerMinusUpper,
            scheme: Scheme::Feit,
        },
    })
}

/// Phases consistent with a measured `T₋₁ − T₁`: `{Φ*, 2π − Φ*}`, or a
/// single phase when the pair is closer than the scan resolution.
///
/// Scan points above `π` are folded onto `[0, π]` by the mirror symmetry;
/// the folded branch must be strictly monotone.
pub fn invert_phase(scan: &ScanResult, measured_contrast: f64) -> Result<Vec<f64>> {
    let mut branch: Vec<(f64, f64)> = scan
        .abscissa
        .iter()
        .zip(&scan.observable)
        .map(|(&phi, &v)| (if phi > PI { TWO_PI - phi } else { phi }, v))
        .collect();
    branch.sort_by(|a, b| a.0.total_cmp(&b.0));
    branch.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-12);
    if branch.len() < 2 {
        return Err(Error::NotMonotone);
    }
    let rising = branch[1].1 > branch[0].1;
    let monotone = branch
        .windows(2)
        .all(|w| if rising { w[1].1 > w[0].1 } else { w[1].1 < w[0].1 });
    if !monotone {
        return Err(Error::NotMonotone);
    }
    let (lo, hi) = {
        let (a, b) = (branch[0].1, branch[branch.len() - 1].1);
        (a.min(b), a.max(b))
    };
    if !(lo..=hi).contains(&measured_contrast) {
        return Err(Error::OutOfRange {
            value: measured_contrast,
            min: lo,
            max: hi,
        });
    }
    // first index whose value is at or past the measurement
    let j = branch
        .partition_point(|&(_, v)| if rising { v < measured_contrast } else { v > measured_contrast })
        .clamp(1, branch.len() - 1);
    let (p0, v0) = branch[j - 1];
    let (p1, v1) = branch[j];
    let phi = if measured_contrast == v1 {
        p1
    } else {
        p0 + (measured_contrast - v0) / (v1 - v0) * (p1 - p0)
    };
    let step = p1 - p0;
    if circular_distance(phi, TWO_PI - phi) < step {
        let snapped = if phi > 0.5 * PI { PI } else { 0.0 };
        return Ok(vec![snapped]);
    }
    Ok(vec![phi, TWO_PI - phi])
}

/// `T₁ − T₋₁` at each time of `t_grid` with the modulation detuned by
/// `δ_ω = ω_s − L ω_g`.
pub fn time_trace(experiment: &Experiment, delta_omega: f64, t_grid: &[f64]) -> Result<ScanResult> {
    validate_abscissa(t_grid, "time")?;
    let detuned = detuned_experiment(experiment, delta_omega)?;
    let bands = first_bands();
    let none = Perturbation::default();
    let observable = t_grid
        .par_iter()
        .map(|&t| {
            let c = detuned.couplings(Scheme::Feit, bands, Some(t))?;
            let e = &detuned;
            let upper = locked_transmission(&c, 1, &e.medium, &e.lasers, &e.doppler, &none)?;
            let lower = locked_transmission(&c, -1, &e.medium, &e.lasers, &e.doppler, &none)?;
            Ok(upper - lower)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScanResult {
        abscissa: t_grid.to_vec(),
        observable,
        sigma: None,
        tag: ScanTag {
            observable: ObservableKind::UpperMinusLower,
            scheme: Scheme::Feit,
        },
    })
}

pub const DEFAULT_AMBIGUITY_MARGIN: f64 = 1e-6;

/// Pick the candidate whose simulated trace has the smaller RMS distance to
/// `measured`.
pub fn disambiguate_phase(
    candidates: &[f64],
    measured: &ScanResult,
    experiment: &Experiment,
    delta_omega: f64,
    margin: f64,
) -> Result<f64> {
    match candidates {
        [] => Err(Error::param("no candidate phases")),
        [only] => Ok(*only),
        [a, b] => {
            if measured.len() < 2 {
                return Err(Error::param("measured trace needs at least two samples"));
            }
            if delta_omega != 0.0 {
                let n = measured.len() as f64;
                let span = measured.abscissa[measured.len() - 1] - measured.abscissa[0];
                let period = TWO_PI / delta_omega.abs();
                if span < period * (n - 1.0) / n * (1.0 - 1e-9) {
                    return Err(Error::param("measured trace must cover one detuning period"));
                }
            }
            let rms = |phi: f64| -> Result<f64> {
                let mut e = experiment.clone();
                e.drive = e.drive.with_phase(phi);
                let sim = time_trace(&e, delta_omega, &measured.abscissa)?;
                let ss: f64 = sim
                    .observable
                    .iter()
                    .zip(&measured.observable)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                Ok((ss / measured.len() as f64).sqrt())
            };
            let (ra, rb) = (rms(*a)?, rms(*b)?);
            if (ra - rb).abs() <= margin {
                return Err(Error::Ambiguous { a: *a, b: *b, margin });
            }
            Ok(if ra < rb { *a } else { *b })
        }
        _ => Err(Error::param("expected at most two candidate phases")),
    }
}

pub const DEFAULT_PERIOD_POINTS: usize = 256;

fn validate_field_grid(eps_grid: &[f64]) -> Result<()> {
    validate_abscissa(eps_grid, "eps_rf")?;
    if eps_grid[0] < 0.0 {
        return Err(Error::param("eps_rf grid must be >= 0"));
    }
    Ok(())
}

fn field_scan(
    experiment: &Experiment,
    observable: Observable,
    eps_grid: &[f64],
) -> Result<ScanResult> {
    validate_field_grid(eps_grid)?;
    let values = eps_grid
        .par_iter()
        .map(|&eps| {
            let mut e = experiment.clone();
            e.drive = e.drive.with_eps_rf(eps)?;
            observable.evaluate(&e)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScanResult {
        abscissa: eps_grid.to_vec(),
        observable: values,
        sigma: None,
        tag: ScanTag {
            observable: ObservableKind::Contrast,
            scheme: observable.scheme(),
        },
    })
}

/// FEIT contrast: peak-to-peak of `T₋₁ − T₁` over one detuning period
/// sampled at `points` instants, for each `ε_rf`.
pub fn amplitude_scan(
    experiment: &Experiment,
    delta_omega: f64,
    eps_grid: &[f64],
    points: usize,
) -> Result<ScanResult> {
    field_scan(experiment, Observable::FeitContrast { delta_omega, points }, eps_grid)
}

/// EIT contrast `T₋₁|ε_rf − T₋₁|0`.
pub fn eit_amplitude_scan(experiment: &Experiment, eps_grid: &[f64]) -> Result<ScanResult> {
    field_scan(experiment, Observable::EitContrast, eps_grid)
}

/// Field strength on the rising branch of an amplitude scan that produces
/// `measured_contrast`, by linear interpolation.
pub fn invert_amplitude(scan: &ScanResult, measured_contrast: f64) -> Result<f64> {
    let v = &scan.observable;
    let mut end = 1;
    while end < v.len() && v[end] > v[end - 1] {
        end += 1;
    }
    if end < 2 {
        return Err(Error::NotMonotone);
    }
    let (lo, hi) = (v[0], v[end - 1]);
    if !(lo..=hi).contains(&measured_contrast) {
        return Err(Error::OutOfRange {
            value: measured_contrast,
            min: lo,
            max: hi,
        });
    }
    let j = v[..end].partition_point(|&x| x < measured_contrast).clamp(1, end - 1);
    let (x0, x1) = (scan.abscissa[j - 1], scan.abscissa[j]);
    Ok(x0 + (measured_contrast - v[j - 1]) / (v[j] - v[j - 1]) * (x1 - x0))
}

/// Accuracy estimate per abscissa point.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCurve {
    pub abscissa: Vec<f64>,
    /// `σ / |∂O|`, infinite where the slope vanishes.
    pub accuracy: Vec<f64>,
    /// Monte-Carlo standard deviation of the observable.
    pub sigma: Vec<f64>,
    pub mean: Vec<f64>,
    /// Central difference at the configured step.
    pub derivative: Vec<f64>,
    /// Whether the half-step Richardson estimate agrees within 1%.
    pub richardson_ok: Vec<bool>,
    pub tag: ScanTag,
}

impl AccuracyCurve {
    pub fn to_scan(&self) -> ScanResult {
        ScanResult {
            abscissa: self.abscissa.clone(),
            observable: self.accuracy.clone(),
            sigma: Some(self.sigma.clone()),
            tag: self.tag,
        }
    }

    /// Index and value of the smallest finite accuracy.
    pub fn minimum(&self) -> Option<(usize, f64)> {
        self.accuracy
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

pub const PHASE_STEP: f64 = 1e-3;
pub const FIELD_STEP: f64 = 1e-3;
const SLOPE_FLOOR: f64 = 1e-15;

struct Slope {
    value: f64,
    richardson_ok: bool,
}

fn central_slope(f: impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<Slope> {
    let d_h = (f(x + h)? - f(x - h)?) / (2.0 * h);
    let half = 0.5 * h;
    let d_half = (f(x + half)? - f(x - half)?) / (2.0 * half);
    let extrapolated = (4.0 * d_half - d_h) / 3.0;
    Ok(Slope {
        value: d_h,
        richardson_ok: (d_h - extrapolated).abs() <= 0.01 * extrapolated.abs(),
    })
}

fn accuracy_curve(
    experiment: &Experiment,
    grid: &[f64],
    noise: &NoiseModel,
    observable: Observable,
    step: f64,
    set: impl Fn(&Experiment, f64) -> Result<Experiment> + Sync,
    tag: ScanTag,
) -> Result<AccuracyCurve> {
    noise.validate()?;
    let rows = grid
        .par_iter()
        .map(|&x| {
            let at = set(experiment, x)?;
            let stats = monte_carlo_observable(&observable, &at, noise)?;
            let slope = central_slope(|y| observable.evaluate(&set(experiment, y)?), x, step)?;
            let accuracy = if slope.value.abs() < SLOPE_FLOOR {
                f64::INFINITY
            } else {
                stats.std / slope.value.abs()
            };
            Ok((accuracy, stats, slope))
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.iter().any(|(_, _, s)| !s.richardson_ok) {
        log::warn!("finite-difference slope failed the half-step check at some points");
    }
    Ok(AccuracyCurve {
        abscissa: grid.to_vec(),
        accuracy: rows.iter().map(|r| r.0).collect(),
        sigma: rows.iter().map(|r| r.1.std).collect(),
        mean: rows.iter().map(|r| r.1.mean).collect(),
        derivative: rows.iter().map(|r| r.2.value).collect(),
        richardson_ok: rows.iter().map(|r| r.2.richardson_ok).collect(),
        tag,
    })
}

/// `δΦ_s = σ(T₋₁ − T₁) / |∂(T₋₁ − T₁)/∂Φ_s|` on a phase grid.
pub fn phase_accuracy(experiment: &Experiment, phi_grid: &[f64], noise: &NoiseModel) -> Result<AccuracyCurve> {
    validate_abscissa(phi_grid, "phase")?;
    accuracy_curve(
        experiment,
        phi_grid,
        noise,
        Observable::PhaseContrast,
        PHASE_STEP,
        |e, phi| {
            let mut out = e.clone();
            out.drive = e.drive.with_phase(phi);
            Ok(out)
        },
        ScanTag {
            observable: ObservableKind::PhaseAccuracy,
            scheme: Scheme::Feit,
        },
    )
}

/// `δε_rf = σ(ΔT) / |∂ΔT/∂ε_rf|` for the FEIT or EIT amplitude protocol.
/// Every grid point must be at least one step above zero.
pub fn amplitude_accuracy(
    experiment: &Experiment,
    scheme: Scheme,
    delta_omega: f64,
    eps_grid: &[f64],
    points: usize,
    noise: &NoiseModel,
) -> Result<AccuracyCurve> {
    validate_field_grid(eps_grid)?;
    if eps_grid[0] < FIELD_STEP {
        return Err(Error::param(format!("eps_rf grid must start at >= {FIELD_STEP} V/cm")));
    }
    let observable = match scheme {
        Scheme::Feit => Observable::FeitContrast { delta_omega, points },
        Scheme::Eit => Observable::EitContrast,
    };
    accuracy_curve(
        experiment,
        eps_grid,
        noise,
        observable,
        FIELD_STEP,
        |e, eps| {
            let mut out = e.clone();
            out.drive = e.drive.with_eps_rf(eps)?;
            Ok(out)
        },
        ScanTag {
            observable: ObservableKind::AmplitudeAccuracy,
            scheme,
        },
    )
}
