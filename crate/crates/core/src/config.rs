//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! rf.eps_rf_v_per_cm = 0.5
//! mod.omega_g_mhz = 30        # trailing comments are fine
//! rf.omega_s_mhz = 30 MHz     # an inline unit must match the key suffix
//! ```
//!
//! Keys carry their unit as a suffix. Frequencies under `*_mhz` keys are
//! ordinary frequencies and get multiplied by 2π on the way in. Values are
//! kept in configuration units, so rendering a config and parsing it again
//! gives back an identical value.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;

use crate::floquet::{
    commensurate_ratio, AtomMedium, BandRange, ControlModulation, LaserParams, RfDrive, Truncation,
    Waveform,
};
use crate::protocols::{phase_grid, NoiseModel};
use crate::spectroscopy::{detuning_grid, BeamGeometry, DopplerModel, Experiment, Scheme};
use crate::special::{MAX_QUADRATURE_ORDER, MIN_QUADRATURE_ORDER};
use crate::units::{mhz_to_angular, SPEED_OF_LIGHT};
use crate::floquet::stark_shift;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Syntax,
    UnknownKey,
    DuplicateKey,
    UnitMismatch,
    Invariant,
}

impl ConfigErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ConfigErrorKind::Syntax => "syntax",
            ConfigErrorKind::UnknownKey => "unknown-key",
            ConfigErrorKind::DuplicateKey => "duplicate-key",
            ConfigErrorKind::UnitMismatch => "unit-mismatch",
            ConfigErrorKind::Invariant => "invariant",
        }
    }
}

/// A configuration problem. `line` and `column` are 1-based; line 0 means
/// the problem comes from defaults rather than from a line of the file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub kind: ConfigErrorKind,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.column, self.kind.name(), self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DopplerKind {
    Analytic,
    GaussHermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccuracyTarget {
    Phase,
    Amplitude,
}

/// Fourier coefficients for `mod.waveform = custom`, written
/// `n:re[:im]` separated by spaces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Coefficients(pub Vec<(i32, f64, f64)>);

/// How a value is read from and written to the configuration text.
trait ConfigValue: Sized {
    fn parse_value(raw: &str) -> Result<Self, String>;
    fn render_value(&self) -> String;
    fn allows_empty() -> bool {
        false
    }
}

fn render_f64(v: f64) -> String {
    // Both forms are shortest round-trip representations.
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_f64(raw: &str) -> Result<f64, String> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("expected a finite number, got {raw:?}"))
}

impl ConfigValue for f64 {
    fn parse_value(raw: &str) -> Result<Self, String> {
        parse_f64(raw)
    }
    fn render_value(&self) -> String {
        render_f64(*self)
    }
}

impl ConfigValue for Option<f64> {
    fn parse_value(raw: &str) -> Result<Self, String> {
        if raw == "auto" {
            Ok(None)
        } else {
            parse_f64(raw).map(Some)
        }
    }
    fn render_value(&self) -> String {
        self.map_or_else(|| "auto".to_string(), render_f64)
    }
}

macro_rules! integer_value {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn parse_value(raw: &str) -> Result<Self, String> {
                raw.parse::<$t>().map_err(|_| format!("expected an integer, got {raw:?}"))
            }
            fn render_value(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
integer_value!(i32, u64, usize);

impl ConfigValue for bool {
    fn parse_value(raw: &str) -> Result<Self, String> {
        match raw {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(format!("expected true or false, got {raw:?}")),
        }
    }
    fn render_value(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for PathBuf {
    fn parse_value(raw: &str) -> Result<Self, String> {
        Ok(PathBuf::from(raw))
    }
    fn render_value(&self) -> String {
        self.display().to_string()
    }
}

macro_rules! keyword_value {
    ($t:ty { $($word:literal => $variant:expr),* $(,)? }) => {
        impl ConfigValue for $t {
            fn parse_value(raw: &str) -> Result<Self, String> {
                match raw {
                    $($word => Ok($variant),)*
                    _ => Err(format!(
                        "expected one of {}, got {raw:?}",
                        [$($word),*].join(", ")
                    )),
                }
            }
            fn render_value(&self) -> String {
                $(if *self == $variant { return $word.to_string(); })*
                unreachable!()
            }
        }
    };
}
keyword_value!(Waveform { "cosine" => Waveform::Cosine, "constant" => Waveform::Constant, "custom" => Waveform::Custom });
keyword_value!(Scheme { "feit" => Scheme::Feit, "eit" => Scheme::Eit });
keyword_value!(BeamGeometry { "counter" => BeamGeometry::Counter, "co" => BeamGeometry::Co });
keyword_value!(DopplerKind { "analytic" => DopplerKind::Analytic, "gauss-hermite" => DopplerKind::GaussHermite });
keyword_value!(AccuracyTarget { "phase" => AccuracyTarget::Phase, "amplitude" => AccuracyTarget::Amplitude });

impl ConfigValue for Coefficients {
    fn parse_value(raw: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for item in raw.split_whitespace() {
            let parts: Vec<&str> = item.split(':').collect();
            if !(2..=3).contains(&parts.len()) {
                return Err(format!("coefficient {item:?} is not n:re[:im]"));
            }
            let n = i32::from_str(parts[0]).map_err(|_| format!("bad index in {item:?}"))?;
            let re = parse_f64(parts[1])?;
            let im = parts.get(2).map_or(Ok(0.0), |p| parse_f64(p))?;
            if out.iter().any(|&(m, _, _)| m == n) {
                return Err(format!("index {n} given twice"));
            }
            out.push((n, re, im));
        }
        Ok(Coefficients(out))
    }
    fn render_value(&self) -> String {
        self.0
            .iter()
            .map(|&(n, re, im)| {
                if im == 0.0 {
                    format!("{n}:{}", render_f64(re))
                } else {
                    format!("{n}:{}:{}", render_f64(re), render_f64(im))
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
    fn allows_empty() -> bool {
        true
    }
}

/// Inline unit spellings accepted after a number for each key suffix.
const UNIT_TOKENS: &[(&str, &[&str])] = &[
    ("mhz", &["mhz"]),
    ("v_per_cm", &["v/cm"]),
    ("rad", &["rad"]),
    ("k", &["k"]),
    ("m", &["m"]),
    ("kg", &["kg"]),
    ("c_m", &["c*m", "c·m", "cm"]),
    ("per_m3", &["m^-3", "1/m^3", "/m3"]),
    ("mhz_per_v2_cm2", &["mhz/(v/cm)^2", "mhz*cm^2/v^2"]),
];

macro_rules! config_keys {
    ($( $field:ident : $ty:ty = $default:expr => $key:literal [$unit:literal] $doc:literal ; )*) => {
        /// Every run parameter in configuration units.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $( #[doc = $doc] pub $field: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig { $( $field: $default, )* }
            }
        }

        /// `(key, unit suffix, description)` for every recognized key.
        pub const KEYS: &[(&str, &str, &str)] = &[ $( ($key, $unit, $doc), )* ];

        impl RunConfig {
            fn assign(&mut self, key: &str, raw: &str) -> Option<Result<(), String>> {
                match key {
                    $( $key => Some(if raw.is_empty() && !<$ty as ConfigValue>::allows_empty() {
                        Err("missing value".to_string())
                    } else {
                        <$ty as ConfigValue>::parse_value(raw).map(|v| self.$field = v)
                    }), )*
                    _ => None,
                }
            }

            fn rendered_values(&self) -> Vec<(&'static str, String)> {
                vec![ $( ($key, ConfigValue::render_value(&self.$field)), )* ]
            }
        }
    };
}

config_keys! {
    eps_dc: f64 = 3.0 => "rf.eps_dc_v_per_cm" ["v_per_cm"] "DC field ε_dc";
    eps_rf: f64 = 0.5 => "rf.eps_rf_v_per_cm" ["v_per_cm"] "RF amplitude ε_rf";
    omega_s_mhz: f64 = 30.0 => "rf.omega_s_mhz" ["mhz"] "RF frequency ω_s/2π";
    phi_s: f64 = 0.0 => "rf.phi_s_rad" ["rad"] "RF phase Φ_s";
    waveform: Waveform = Waveform::Cosine => "mod.waveform" [""] "control modulation g(t): cosine, constant or custom";
    coefficients: Coefficients = Coefficients::default() => "mod.coefficients" [""] "custom Fourier coefficients n:re[:im], e^{+in(ω_g t+Φ_g)} convention";
    omega_g_mhz: f64 = 30.0 => "mod.omega_g_mhz" ["mhz"] "modulation frequency ω_g/2π";
    phi_g: f64 = 0.0 => "mod.phi_g_rad" ["rad"] "modulation reference phase Φ_g";
    delta_omega_mhz: f64 = 0.005 => "mod.delta_omega_mhz" ["mhz"] "detuning δ_ω/2π for time traces and amplitude scans";
    alpha_mhz: f64 = 51.6 / 4.5625 => "medium.alpha_mhz_per_v2_cm2" ["mhz_per_v2_cm2"] "polarizability α/(2πħ)";
    omega_21_mhz: f64 = SPEED_OF_LIGHT / 780e-9 / 1e6 => "medium.omega_21_mhz" ["mhz"] "probe transition frequency";
    omega_32_mhz: f64 = SPEED_OF_LIGHT / 480e-9 / 1e6 => "medium.omega_32_mhz" ["mhz"] "control transition frequency";
    gamma1_mhz: f64 = 3.0 => "medium.gamma1_mhz" ["mhz"] "decay rate Γ₁/2π";
    gamma2_mhz: f64 = 0.1 => "medium.gamma2_mhz" ["mhz"] "decay rate Γ₂/2π";
    mu12: f64 = 1.0e-29 => "medium.mu12_c_m" ["c_m"] "probe dipole moment";
    n0: f64 = 4.5e16 => "medium.n0_per_m3" ["per_m3"] "atom density";
    t0: f64 = 300.0 => "medium.t0_k" ["k"] "temperature";
    mass: f64 = 1.41e-25 => "medium.mass_kg" ["kg"] "atomic mass";
    length: f64 = 0.05 => "medium.length_m" ["m"] "cell length";
    omega_p_mhz: f64 = 0.1 => "laser.omega_p_mhz" ["mhz"] "probe Rabi frequency Ω_p/2π";
    omega_c_mhz: f64 = 1.0 => "laser.omega_c_mhz" ["mhz"] "control Rabi frequency Ω_c/2π";
    delta_p_mhz: f64 = 0.0 => "laser.delta_p_mhz" ["mhz"] "probe detuning Δ_p/2π";
    delta_c_mhz: f64 = 0.0 => "laser.delta_c_mhz" ["mhz"] "control detuning Δ_c/2π outside sweeps";
    lambda_p: f64 = 780e-9 => "laser.lambda_p_m" ["m"] "probe wavelength";
    lambda_c: f64 = 480e-9 => "laser.lambda_c_m" ["m"] "control wavelength";
    geometry: BeamGeometry = BeamGeometry::Counter => "laser.geometry" [""] "beam geometry: counter or co";
    control_rel_sigma: f64 = 0.01 => "noise.omega_c_rel_sigma" [""] "relative 1σ of Ω_c";
    laser_sigma_mhz: f64 = 0.1 => "noise.laser_freq_sigma_mhz" ["mhz"] "1σ laser frequency jitter";
    correlation: f64 = 0.0 => "noise.correlation" [""] "probe/control jitter correlation";
    samples: usize = 10_000 => "noise.samples" [""] "Monte-Carlo samples";
    seed: u64 = 0x5eed => "noise.seed" [""] "PRNG seed";
    detuning_center_mhz: Option<f64> = None => "grid.detuning_center_mhz" ["mhz"] "sweep centre, or auto for -ω_α/2π";
    detuning_half_width_mhz: f64 = 80.0 => "grid.detuning_half_width_mhz" ["mhz"] "sweep half width";
    detuning_points: usize = 2001 => "grid.detuning_points" [""] "sweep points";
    phase_points: usize = 201 => "grid.phase_points" [""] "phases 2πk/N for phase scans and accuracy";
    time_points: usize = 64 => "grid.time_points" [""] "time-trace samples over one detuning period";
    period_points: usize = 256 => "grid.period_points" [""] "samples per period in the amplitude protocol";
    eps_rf_min: f64 = 0.0 => "grid.eps_rf_min_v_per_cm" ["v_per_cm"] "amplitude scan start";
    eps_rf_max: f64 = 3.0 => "grid.eps_rf_max_v_per_cm" ["v_per_cm"] "amplitude scan end";
    eps_rf_points: usize = 61 => "grid.eps_rf_points" [""] "amplitude scan points";
    accuracy_eps_min: f64 = 0.1 => "grid.accuracy_eps_min_v_per_cm" ["v_per_cm"] "amplitude accuracy start";
    accuracy_eps_max: f64 = 0.9 => "grid.accuracy_eps_max_v_per_cm" ["v_per_cm"] "amplitude accuracy end";
    accuracy_eps_points: usize = 9 => "grid.accuracy_eps_points" [""] "amplitude accuracy points";
    scheme: Scheme = Scheme::Feit => "run.scheme" [""] "spectrum and accuracy scheme: feit or eit";
    accuracy: AccuracyTarget = AccuracyTarget::Phase => "run.accuracy" [""] "accuracy subcommand target: phase or amplitude";
    band_min: i32 = -2 => "run.band_min" [""] "lowest band index";
    band_max: i32 = 2 => "run.band_max" [""] "highest band index";
    doppler: DopplerKind = DopplerKind::Analytic => "run.doppler" [""] "velocity average: analytic or gauss-hermite";
    quadrature_order: usize = 64 => "run.quadrature_order" [""] "Gauss-Hermite order when run.doppler = gauss-hermite";
    truncation_margin: usize = 25 => "run.truncation_margin" [""] "extra Bessel orders beyond the argument";
    product_column: bool = false => "run.product_column" [""] "append the Π T_n column to spectrum CSVs";
    ambiguity_margin: f64 = 1e-6 => "run.ambiguity_margin" [""] "RMS margin for phase disambiguation";
    out_dir: PathBuf = PathBuf::from("out") => "run.out_dir" [""] "output directory";
}

/// Parse configuration text; missing keys keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    let mut seen: Vec<(&'static str, usize)> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let Some(eq) = content.find('=') else {
            return Err(err(line, col(content, indent), ConfigErrorKind::Syntax, "expected 'section.key = value'"));
        };
        let key = content[..eq].trim();
        let value_part = &content[eq + 1..];
        let value = value_part.trim();
        let value_col = col(content, eq + 1 + (value_part.len() - value_part.trim_start().len()));
        if !valid_key(key) {
            return Err(err(line, col(content, indent), ConfigErrorKind::Syntax, format!("malformed key {key:?}")));
        }
        let Some(&(name, unit, _)) = KEYS.iter().find(|k| k.0 == key) else {
            return Err(unknown_key(key, line, col(content, indent)));
        };
        if let Some(&(_, first)) = seen.iter().find(|s| s.0 == name) {
            return Err(err(
                line,
                col(content, indent),
                ConfigErrorKind::DuplicateKey,
                format!("{key} already set on line {first}"),
            ));
        }
        seen.push((name, line));
        let number = strip_unit(value, unit, line, value_col)?;
        if let Some(Err(message)) = config.assign(name, number) {
            return Err(err(line, value_col, ConfigErrorKind::Syntax, format!("{key}: {message}")));
        }
    }
    if let Err((key, message)) = config.check() {
        let line = seen.iter().find(|s| s.0 == key).map_or(0, |s| s.1);
        return Err(err(line, usize::from(line > 0), ConfigErrorKind::Invariant, format!("{key}: {message}")));
    }
    Ok(config)
}

fn err(line: usize, column: usize, kind: ConfigErrorKind, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        column,
        kind,
        message: message.into(),
    }
}

/// 1-based character column of a byte offset.
fn col(s: &str, byte: usize) -> usize {
    s[..byte.min(s.len())].chars().count() + 1
}

fn valid_key(key: &str) -> bool {
    let mut parts = key.split('.');
    let ok = |p: Option<&str>| {
        p.is_some_and(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_'))
    };
    ok(parts.next()) && ok(parts.next()) && parts.next().is_none()
}

fn unknown_key(key: &str, line: usize, column: usize) -> ConfigError {
    for &(known, unit, _) in KEYS {
        if unit.is_empty() {
            continue;
        }
        let stem = &known[..known.len() - unit.len() - 1];
        if key == stem || key.strip_prefix(stem).is_some_and(|rest| rest.starts_with('_')) {
            return err(
                line,
                column,
                ConfigErrorKind::UnitMismatch,
                format!("{key}: this quantity is configured as {known} (unit suffix _{unit})"),
            );
        }
    }
    err(line, column, ConfigErrorKind::UnknownKey, format!("unknown key {key:?}"))
}

/// Split `value [unit]`, checking an inline unit against the key suffix.
fn strip_unit<'a>(value: &'a str, unit: &str, line: usize, column: usize) -> Result<&'a str, ConfigError> {
    if unit.is_empty() {
        return Ok(value);
    }
    let mut parts = value.splitn(2, char::is_whitespace);
    let number = parts.next().unwrap_or("");
    let Some(rest) = parts.next().map(str::trim).filter(|r| !r.is_empty()) else {
        return Ok(number);
    };
    let accepted = UNIT_TOKENS.iter().find(|(u, _)| *u == unit).map_or(&[][..], |(_, t)| t);
    if accepted.iter().any(|t| t.eq_ignore_ascii_case(rest)) {
        Ok(number)
    } else {
        let offset = value.len() - rest.len();
        Err(err(
            line,
            column + value[..offset].chars().count(),
            ConfigErrorKind::UnitMismatch,
            format!("unit {rest:?} does not match the key's _{unit} suffix"),
        ))
    }
}

type Check = Result<(), (&'static str, String)>;

fn positive(key: &'static str, v: f64) -> Check {
    if v > 0.0 {
        Ok(())
    } else {
        Err((key, format!("must be > 0, got {v}")))
    }
}

fn non_negative(key: &'static str, v: f64) -> Check {
    if v >= 0.0 {
        Ok(())
    } else {
        Err((key, format!("must be >= 0, got {v}")))
    }
}

impl RunConfig {
    /// Physical and structural invariants; the error names the key to blame.
    fn check(&self) -> Check {
        non_negative("rf.eps_dc_v_per_cm", self.eps_dc)?;
        non_negative("rf.eps_rf_v_per_cm", self.eps_rf)?;
        positive("rf.omega_s_mhz", self.omega_s_mhz)?;
        positive("mod.omega_g_mhz", self.omega_g_mhz)?;
        if commensurate_ratio(self.omega_s_mhz, self.omega_g_mhz).is_err() {
            return Err((
                "mod.omega_g_mhz",
                format!("omega_s/omega_g = {} is not a positive integer", self.omega_s_mhz / self.omega_g_mhz),
            ));
        }
        if self.delta_omega_mhz.abs() >= self.omega_g_mhz {
            return Err(("mod.delta_omega_mhz", "must be much smaller than omega_g".to_string()));
        }
        match (self.waveform, self.coefficients.0.is_empty()) {
            (Waveform::Custom, true) => {
                return Err(("mod.coefficients", "custom waveform needs coefficients".to_string()))
            }
            (Waveform::Custom, false) => {
                if self.coefficients.0.iter().all(|&(_, re, im)| re == 0.0 && im == 0.0) {
                    return Err(("mod.coefficients", "all coefficients are zero".to_string()));
                }
            }
            (_, false) => {
                return Err(("mod.coefficients", "only used with mod.waveform = custom".to_string()))
            }
            _ => {}
        }
        for (key, v) in [
            ("medium.omega_21_mhz", self.omega_21_mhz),
            ("medium.omega_32_mhz", self.omega_32_mhz),
            ("medium.gamma1_mhz", self.gamma1_mhz),
            ("medium.gamma2_mhz", self.gamma2_mhz),
            ("medium.n0_per_m3", self.n0),
            ("medium.t0_k", self.t0),
            ("medium.mass_kg", self.mass),
            ("medium.length_m", self.length),
            ("laser.lambda_p_m", self.lambda_p),
            ("laser.lambda_c_m", self.lambda_c),
        ] {
            positive(key, v)?;
        }
        non_negative("laser.omega_p_mhz", self.omega_p_mhz)?;
        non_negative("laser.omega_c_mhz", self.omega_c_mhz)?;
        non_negative("noise.omega_c_rel_sigma", self.control_rel_sigma)?;
        non_negative("noise.laser_freq_sigma_mhz", self.laser_sigma_mhz)?;
        if self.correlation.abs() > 1.0 {
            return Err(("noise.correlation", "must lie in [-1, 1]".to_string()));
        }
        if self.samples < 2 {
            return Err(("noise.samples", "must be >= 2".to_string()));
        }
        positive("grid.detuning_half_width_mhz", self.detuning_half_width_mhz)?;
        for (key, v) in [
            ("grid.detuning_points", self.detuning_points),
            ("grid.phase_points", self.phase_points),
            ("grid.time_points", self.time_points),
            ("grid.period_points", self.period_points),
            ("grid.eps_rf_points", self.eps_rf_points),
            ("grid.accuracy_eps_points", self.accuracy_eps_points),
        ] {
            if v < 2 {
                return Err((key, "must be >= 2".to_string()));
            }
        }
        non_negative("grid.eps_rf_min_v_per_cm", self.eps_rf_min)?;
        if self.eps_rf_max <= self.eps_rf_min {
            return Err(("grid.eps_rf_max_v_per_cm", "must exceed grid.eps_rf_min_v_per_cm".to_string()));
        }
        if self.accuracy_eps_min < crate::protocols::FIELD_STEP {
            return Err(("grid.accuracy_eps_min_v_per_cm", "must be >= 0.001".to_string()));
        }
        if self.accuracy_eps_max <= self.accuracy_eps_min {
            return Err((
                "grid.accuracy_eps_max_v_per_cm",
                "must exceed grid.accuracy_eps_min_v_per_cm".to_string(),
            ));
        }
        if self.band_min > self.band_max {
            return Err(("run.band_max", "must be >= run.band_min".to_string()));
        }
        if !(MIN_QUADRATURE_ORDER..=MAX_QUADRATURE_ORDER).contains(&self.quadrature_order) {
            return Err(("run.quadrature_order", "must lie in [2, 256]".to_string()));
        }
        non_negative("run.ambiguity_margin", self.ambiguity_margin)?;
        Ok(())
    }

    /// Re-run the load-time checks, e.g. after command-line overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.check()
            .map_err(|(key, message)| err(0, 0, ConfigErrorKind::Invariant, format!("{key}: {message}")))
    }

    /// Canonical text listing every key; parses back to `self`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.rendered_values() {
            if value.is_empty() {
                out.push_str(&format!("{key} =\n"));
            } else {
                out.push_str(&format!("{key} = {value}\n"));
            }
        }
        out
    }

    pub fn drive(&self) -> crate::Result<RfDrive> {
        RfDrive::new(self.eps_dc, self.eps_rf, mhz_to_angular(self.omega_s_mhz), self.phi_s)
    }

    pub fn modulation(&self) -> crate::Result<ControlModulation> {
        let omega_g = mhz_to_angular(self.omega_g_mhz);
        match self.waveform {
            Waveform::Cosine => ControlModulation::cosine(omega_g, self.phi_g),
            Waveform::Constant => ControlModulation::constant(omega_g),
            Waveform::Custom => ControlModulation::custom(
                omega_g,
                self.phi_g,
                self.coefficients.0.iter().map(|&(n, re, im)| (n, Complex64::new(re, im))),
            ),
        }
    }

    pub fn medium(&self) -> AtomMedium {
        AtomMedium {
            alpha: mhz_to_angular(self.alpha_mhz),
            omega_21: mhz_to_angular(self.omega_21_mhz),
            omega_32: mhz_to_angular(self.omega_32_mhz),
            gamma1: mhz_to_angular(self.gamma1_mhz),
            gamma2: mhz_to_angular(self.gamma2_mhz),
            mu12: self.mu12,
            n0: self.n0,
            t0: self.t0,
            mass: self.mass,
            length: self.length,
        }
    }

    pub fn lasers(&self) -> LaserParams {
        LaserParams {
            omega_p_rabi: mhz_to_angular(self.omega_p_mhz),
            omega_c_rabi: mhz_to_angular(self.omega_c_mhz),
            delta_p: mhz_to_angular(self.delta_p_mhz),
            delta_c: mhz_to_angular(self.delta_c_mhz),
            lambda_p: self.lambda_p,
            lambda_c: self.lambda_c,
        }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            control_rel_sigma: self.control_rel_sigma,
            laser_freq_sigma: mhz_to_angular(self.laser_sigma_mhz),
            correlation: self.correlation,
            samples: self.samples,
            seed: self.seed,
        }
    }

    pub fn doppler(&self) -> crate::Result<DopplerModel> {
        let model = match self.doppler {
            DopplerKind::Analytic => DopplerModel::analytic(),
            DopplerKind::GaussHermite => DopplerModel::gauss_hermite(self.quadrature_order)?,
        };
        Ok(model.with_geometry(self.geometry))
    }

    pub fn experiment(&self) -> crate::Result<Experiment> {
        Ok(Experiment {
            drive: self.drive()?,
            modulation: self.modulation()?,
            medium: self.medium(),
            lasers: self.lasers(),
            doppler: self.doppler()?,
            truncation: Truncation {
                margin: self.truncation_margin,
            },
        })
    }

    pub fn bands(&self) -> crate::Result<BandRange> {
        BandRange::new(self.band_min, self.band_max)
    }

    pub fn delta_omega(&self) -> f64 {
        mhz_to_angular(self.delta_omega_mhz)
    }

    /// Control-detuning sweep in rad/s; `auto` centres it on `−ω_α`.
    pub fn detuning_grid(&self) -> crate::Result<Vec<f64>> {
        let centre = match self.detuning_center_mhz {
            Some(c) => mhz_to_angular(c),
            None => -stark_shift(&self.drive()?, &self.medium()),
        };
        detuning_grid(centre, mhz_to_angular(self.detuning_half_width_mhz), self.detuning_points)
    }

    pub fn phase_grid(&self) -> Vec<f64> {
        phase_grid(self.phase_points)
    }

    pub fn eps_grid(&self) -> Vec<f64> {
        linspace(self.eps_rf_min, self.eps_rf_max, self.eps_rf_points)
    }

    pub fn accuracy_eps_grid(&self) -> Vec<f64> {
        linspace(self.accuracy_eps_min, self.accuracy_eps_max, self.accuracy_eps_points)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| if j + 1 == n { b } else { a + (b - a) * j as f64 / (n - 1) as f64 })
        .collect()
}
