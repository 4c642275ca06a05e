//! RF drive, control-field modulation and the effective couplings of the
//! EIT bands (constant control) and FEIT bands (periodically modulated
//! control).
//!
//! A DC+RF field `ε(t) = ε_dc + ε_rf cos(ω_s t + Φ_s)` Stark-modulates the
//! Rydberg level. Its phase factor splits into sidebands spaced by `ω_s`
//! with real weights
//!
//! ```text
//! A_m = Σ_k J_k(α ε_rf² / 8ħω_s) · J_{m−2k}(α ε_dc ε_rf / ħω_s)
//! ```
//!
//! A control field modulated as `Ω_c g(t)` at `ω_g = ω_s / L` recombines
//! those sidebands into FEIT bands spaced by `ω_g`:
//!
//! ```text
//! Ω_n = Ω_c Σ_m g_{n−mL} A_m e^{i m (Φ_s − L Φ_g)}
//! ```
//!
//! Fourier coefficients follow `g(t) = Σ_n g_n e^{+i n (ω_g t + Φ_g)}`, which
//! makes `Ω_n` exactly the `e^{+i n (ω_g t + Φ_g)}` coefficient of
//! `Ω_c g(t) e^{iφ(t)}`, with `φ` the Stark phase from [`stark_phase`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{bessel_j_symmetric, bessel_j_table};
use crate::units::{mhz_to_angular, wrap_phase, SPEED_OF_LIGHT, TWO_PI};

/// Applied field `ε_dc + ε_rf cos(ω_s t + Φ_s)`; fields in V/cm, `ω_s` in
/// rad/s, `Φ_s` kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfDrive {
    eps_dc: f64,
    eps_rf: f64,
    omega_s: f64,
    phi_s: f64,
}

impl RfDrive {
    pub fn new(eps_dc: f64, eps_rf: f64, omega_s: f64, phi_s: f64) -> Result<Self> {
        if !(eps_dc.is_finite() && eps_dc >= 0.0) {
            return Err(Error::param(format!("eps_dc must be >= 0, got {eps_dc}")));
        }
        if !(eps_rf.is_finite() && eps_rf >= 0.0) {
            return Err(Error::param(format!("eps_rf must be >= 0, got {eps_rf}")));
        }
        if !(omega_s.is_finite() && omega_s > 0.0) {
            return Err(Error::param(format!("omega_s must be > 0, got {omega_s}")));
        }
        if !phi_s.is_finite() {
            return Err(Error::param("phi_s must be finite"));
        }
        Ok(RfDrive {
            eps_dc,
            eps_rf,
            omega_s,
            phi_s: wrap_phase(phi_s),
        })
    }

    pub fn eps_dc(&self) -> f64 {
        self.eps_dc
    }

    pub fn eps_rf(&self) -> f64 {
        self.eps_rf
    }

    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    pub fn phi_s(&self) -> f64 {
        self.phi_s
    }

    pub fn with_phase(self, phi_s: f64) -> Self {
        RfDrive {
            phi_s: wrap_phase(phi_s),
            ..self
        }
    }

    pub fn with_eps_rf(self, eps_rf: f64) -> Result<Self> {
        RfDrive::new(self.eps_dc, eps_rf, self.omega_s, self.phi_s)
    }

    pub fn with_eps_dc(self, eps_dc: f64) -> Result<Self> {
        RfDrive::new(eps_dc, self.eps_rf, self.omega_s, self.phi_s)
    }

    pub fn with_omega_s(self, omega_s: f64) -> Result<Self> {
        RfDrive::new(self.eps_dc, self.eps_rf, omega_s, self.phi_s)
    }

    /// Instantaneous field in V/cm.
    pub fn field(&self, t: f64) -> f64 {
        self.eps_dc + self.eps_rf * (self.omega_s * t + self.phi_s).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Waveform {
    /// `g(t) = [1 + cos(ω_g t + Φ_g)] / 2`
    Cosine,
    /// `g(t) ≡ 1`, which reduces FEIT to plain EIT.
    Constant,
    /// User-supplied Fourier coefficients.
    Custom,
}

impl Waveform {
    pub fn name(self) -> &'static str {
        match self {
            Waveform::Cosine => "cosine",
            Waveform::Constant => "constant",
            Waveform::Custom => "custom",
        }
    }
}

/// Periodic control modulation `g(t)` with frequency `ω_g` (rad/s) and
/// reference phase `Φ_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlModulation {
    omega_g: f64,
    phi_g: f64,
    coefficients: BTreeMap<i32, Complex64>,
    kind: Waveform,
}

impl ControlModulation {
    pub fn cosine(omega_g: f64, phi_g: f64) -> Result<Self> {
        let coefficients = BTreeMap::from([
            (-1, Complex64::new(0.25, 0.0)),
            (0, Complex64::new(0.5, 0.0)),
            (1, Complex64::new(0.25, 0.0)),
        ]);
        Self::build(omega_g, phi_g, coefficients, Waveform::Cosine)
    }

    pub fn constant(omega_g: f64) -> Result<Self> {
        let coefficients = BTreeMap::from([(0, Complex64::new(1.0, 0.0))]);
        Self::build(omega_g, 0.0, coefficients, Waveform::Constant)
    }

    /// Arbitrary coefficients in the `e^{+i n (ω_g t + Φ_g)}` convention.
    /// Exact zeros are dropped.
    pub fn custom(
        omega_g: f64,
        phi_g: f64,
        coefficients: impl IntoIterator<Item = (i32, Complex64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, g) in coefficients {
            if !(g.re.is_finite() && g.im.is_finite()) {
                return Err(Error::param(format!("coefficient g_{n} is not finite")));
            }
            if g != Complex64::new(0.0, 0.0) {
                map.insert(n, g);
            }
        }
        if map.is_empty() {
            return Err(Error::param("modulation needs at least one non-zero coefficient"));
        }
        Self::build(omega_g, phi_g, map, Waveform::Custom)
    }

    fn build(
        omega_g: f64,
        phi_g: f64,
        coefficients: BTreeMap<i32, Complex64>,
        kind: Waveform,
    ) -> Result<Self> {
        if !(omega_g.is_finite() && omega_g > 0.0) {
            return Err(Error::param(format!("omega_g must be > 0, got {omega_g}")));
        }
        if !phi_g.is_finite() {
            return Err(Error::param("phi_g must be finite"));
        }
        Ok(ControlModulation {
            omega_g,
            phi_g: wrap_phase(phi_g),
            coefficients,
            kind,
        })
    }

    pub fn omega_g(&self) -> f64 {
        self.omega_g
    }

    pub fn phi_g(&self) -> f64 {
        self.phi_g
    }

    pub fn kind(&self) -> Waveform {
        self.kind
    }

    pub fn with_omega_g(&self, omega_g: f64) -> Result<Self> {
        Self::build(omega_g, self.phi_g, self.coefficients.clone(), self.kind)
    }

    pub fn with_phase(&self, phi_g: f64) -> Self {
        ControlModulation {
            phi_g: wrap_phase(phi_g),
            ..self.clone()
        }
    }

    pub fn coefficient(&self, n: i32) -> Complex64 {
        self.coefficients.get(&n).copied().unwrap_or_default()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.coefficients.iter().map(|(&n, &g)| (n, g))
    }

    /// `g_{-n} = conj(g_n)` for every stored index.
    pub fn is_real_waveform(&self) -> bool {
        self.coefficients().all(|(n, g)| {
            let partner = self.coefficient(-n).conj();
            (g - partner).norm() <= 1e-14 * g.norm().max(1.0)
        })
    }

    /// Reconstructed `g(t)`; real for real waveforms.
    pub fn value(&self, t: f64) -> Complex64 {
        let psi = self.omega_g * t + self.phi_g;
        self.coefficients()
            .map(|(n, g)| g * Complex64::from_polar(1.0, n as f64 * psi))
            .sum()
    }
}

/// Atomic and vapor-cell parameters.
///
/// `alpha` holds the polarizability divided by ħ, in rad/s per (V/cm)², so
/// that the mean Stark shift is `alpha · (ε_dc²/2 + ε_rf²/4)` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomMedium {
    pub alpha: f64,
    /// rad/s
    pub omega_21: f64,
    /// rad/s
    pub omega_32: f64,
    /// rad/s
    pub gamma1: f64,
    /// rad/s
    pub gamma2: f64,
    /// Probe transition dipole, C·m.
    pub mu12: f64,
    /// Number density, m⁻³.
    pub n0: f64,
    /// Temperature, K.
    pub t0: f64,
    /// Atomic mass, kg.
    pub mass: f64,
    /// Cell length, m.
    pub length: f64,
}

/// Polarizability that puts the mean Stark shift at 51.6 MHz for
/// `ε_dc = 3 V/cm`, `ε_rf = 0.5 V/cm`; see [`calibrate_alpha`].
pub const DEFAULT_ALPHA: f64 = TWO_PI * (51.6 / 4.5625) * 1e6;

impl Default for AtomMedium {
    fn default() -> Self {
        AtomMedium {
            alpha: DEFAULT_ALPHA,
            omega_21: mhz_to_angular(SPEED_OF_LIGHT / 780e-9 / 1e6),
            omega_32: mhz_to_angular(SPEED_OF_LIGHT / 480e-9 / 1e6),
            gamma1: mhz_to_angular(3.0),
            gamma2: mhz_to_angular(0.1),
            mu12: 1.0e-29,
            n0: 4.5e16,
            t0: 300.0,
            mass: 1.41e-25,
            length: 0.05,
        }
    }
}

impl AtomMedium {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("n0", self.n0),
            ("t0", self.t0),
            ("mass", self.mass),
            ("length", self.length),
            ("omega_21", self.omega_21),
            ("omega_32", self.omega_32),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("medium.{name} must be > 0, got {v}")));
            }
        }
        if !self.alpha.is_finite() || !self.mu12.is_finite() {
            return Err(Error::param("medium.alpha and medium.mu12 must be finite"));
        }
        Ok(())
    }

    /// Most probable speed `√(2 k_B T₀ / m)` in m/s.
    pub fn most_probable_speed(&self) -> f64 {
        (2.0 * crate::units::BOLTZMANN * self.t0 / self.mass).sqrt()
    }
}

/// Probe and control laser parameters; rates in rad/s, wavelengths in m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserParams {
    pub omega_p_rabi: f64,
    pub omega_c_rabi: f64,
    pub delta_p: f64,
    pub delta_c: f64,
    pub lambda_p: f64,
    pub lambda_c: f64,
}

impl Default for LaserParams {
    fn default() -> Self {
        LaserParams {
            omega_p_rabi: mhz_to_angular(0.1),
            omega_c_rabi: mhz_to_angular(1.0),
            delta_p: 0.0,
            delta_c: 0.0,
            lambda_p: 780e-9,
            lambda_c: 480e-9,
        }
    }
}

impl LaserParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_p_rabi.is_finite() && self.omega_p_rabi >= 0.0) {
            return Err(Error::param("laser.omega_p must be >= 0"));
        }
        if !(self.omega_c_rabi.is_finite() && self.omega_c_rabi >= 0.0) {
            return Err(Error::param("laser.omega_c must be >= 0"));
        }
        if !(self.lambda_p.is_finite() && self.lambda_p > 0.0) {
            return Err(Error::param("laser.lambda_p must be > 0"));
        }
        if !(self.lambda_c.is_finite() && self.lambda_c > 0.0) {
            return Err(Error::param("laser.lambda_c must be > 0"));
        }
        if !self.delta_p.is_finite() || !self.delta_c.is_finite() {
            return Err(Error::param("laser detunings must be finite"));
        }
        Ok(())
    }

    /// Probe optical angular frequency `2πc/λ_p`.
    pub fn probe_frequency(&self) -> f64 {
        TWO_PI * SPEED_OF_LIGHT / self.lambda_p
    }

    /// Control optical angular frequency `2πc/λ_c`.
    pub fn control_frequency(&self) -> f64 {
        TWO_PI * SPEED_OF_LIGHT / self.lambda_c
    }
}

/// Inclusive band-index interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandRange {
    min: i32,
    max: i32,
}

impl BandRange {
    pub fn new(min: i32, max: i32) -> Result<Self> {
        if min > max {
            return Err(Error::param(format!("band range [{min}, {max}] is empty")));
        }
        Ok(BandRange { min, max })
    }

    pub fn symmetric(half_width: u32) -> Self {
        let h = half_width as i32;
        BandRange { min: -h, max: h }
    }

    pub fn min(&self) -> i32 {
        self.min
    }

    pub fn max(&self) -> i32 {
        self.max
    }

    pub fn len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: i32) -> bool {
        (self.min..=self.max).contains(&n)
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<i32> {
        self.min..=self.max
    }

    pub fn widened(&self, by: u32) -> Self {
        BandRange {
            min: self.min - by as i32,
            max: self.max + by as i32,
        }
    }
}

/// Truncation of the infinite Bessel sums: `|k| ≤ ceil(max |x|) + margin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    pub margin: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { margin: 25 }
    }
}

/// Bessel arguments `(α ε_rf²/8ħω_s, α ε_dc ε_rf/ħω_s)`.
pub fn bessel_arguments(drive: &RfDrive, medium: &AtomMedium) -> (f64, f64) {
    let second_harmonic = medium.alpha * drive.eps_rf * drive.eps_rf / (8.0 * drive.omega_s);
    let fundamental = medium.alpha * drive.eps_dc * drive.eps_rf / drive.omega_s;
    (second_harmonic, fundamental)
}

/// Stark phase `φ(t) = ∫ (α ε(t)²/2ħ − ω_α) dt`, zero-mean over an RF period.
pub fn stark_phase(drive: &RfDrive, medium: &AtomMedium, t: f64) -> f64 {
    let (a, b) = bessel_arguments(drive, medium);
    let theta = drive.omega_s * t + drive.phi_s;
    b * theta.sin() + a * (2.0 * theta).sin()
}

/// Table of sideband weights `A_m` for `|m| ≤ m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SidebandTable {
    m_max: i32,
    values: Vec<f64>,
}

impl SidebandTable {
    pub fn new(drive: &RfDrive, medium: &AtomMedium, m_max: usize, truncation: Truncation) -> Self {
        let (a, b) = bessel_arguments(drive, medium);
        let k_max = a.abs().max(b.abs()).ceil() as usize + truncation.margin;
        let j_a = bessel_j_symmetric(k_max, a);
        let reach = m_max + 2 * k_max;
        let j_b_half = bessel_j_table(reach, b);
        let j_b = |j: i64| -> f64 {
            let n = j.unsigned_abs() as usize;
            let v = j_b_half[n];
            if j < 0 && n % 2 == 1 {
                -v
            } else {
                v
            }
        };
        let ki = k_max as i64;
        let values = (-(m_max as i64)..=m_max as i64)
            .map(|m| {
                (-ki..=ki)
                    .map(|k| j_a[(k + ki) as usize] * j_b(m - 2 * k))
                    .sum()
            })
            .collect();
        SidebandTable {
            m_max: m_max as i32,
            values,
        }
    }

    /// Table wide enough that the omitted weights are negligible.
    pub fn complete(drive: &RfDrive, medium: &AtomMedium, truncation: Truncation) -> Self {
        Self::new(drive, medium, Self::natural_width(drive, medium, truncation), truncation)
    }

    /// `ceil(|b| + 2|a|) + margin`: beyond this `A_m` is below double precision.
    pub fn natural_width(drive: &RfDrive, medium: &AtomMedium, truncation: Truncation) -> usize {
        let (a, b) = bessel_arguments(drive, medium);
        (b.abs() + 2.0 * a.abs()).ceil() as usize + truncation.margin
    }

    pub fn m_max(&self) -> i32 {
        self.m_max
    }

    /// `A_m`, zero outside the table.
    pub fn get(&self, m: i32) -> f64 {
        if m.abs() > self.m_max {
            0.0
        } else {
            self.values[(m + self.m_max) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        (-self.m_max..=self.m_max).zip(self.values.iter().copied())
    }
}

/// `A_m` for a single index.
pub fn sideband_coefficient(drive: &RfDrive, medium: &AtomMedium, m: i32) -> f64 {
    SidebandTable::new(drive, medium, m.unsigned_abs() as usize, Truncation::default()).get(m)
}

/// Mean Stark shift `ω_α = α ε_dc²/2 + α ε_rf²/4` in rad/s.
pub fn stark_shift(drive: &RfDrive, medium: &AtomMedium) -> f64 {
    medium.alpha * (0.5 * drive.eps_dc * drive.eps_dc + 0.25 * drive.eps_rf * drive.eps_rf)
}

/// Polarizability (α/ħ) that produces `target_stark_shift` for this drive.
pub fn calibrate_alpha(drive: &RfDrive, target_stark_shift: f64) -> Result<f64> {
    let weight = 0.5 * drive.eps_dc * drive.eps_dc + 0.25 * drive.eps_rf * drive.eps_rf;
    if weight <= 0.0 {
        return Err(Error::Calibration);
    }
    if !target_stark_shift.is_finite() {
        return Err(Error::param("target Stark shift must be finite"));
    }
    Ok(target_stark_shift / weight)
}

/// Effective couplings of a set of bands.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    band_range: BandRange,
    values: Vec<Complex64>,
    /// Band interval in rad/s (`ω_s` for EIT, `ω_g` for FEIT).
    pub band_spacing: f64,
    /// `ω_α` in rad/s.
    pub stark_shift: f64,
}

impl CouplingSet {
    pub fn band_range(&self) -> BandRange {
        self.band_range
    }

    /// Coupling `Ω_n` in rad/s.
    pub fn get(&self, n: i32) -> Option<Complex64> {
        self.band_range
            .contains(n)
            .then(|| self.values[(n - self.band_range.min) as usize])
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.band_range.iter().zip(self.values.iter().copied())
    }

    /// `Δ_n = Δ_c + ω_α + n · spacing`.
    pub fn band_offset(&self, n: i32, delta_c: f64) -> f64 {
        delta_c + self.stark_shift + n as f64 * self.band_spacing
    }

    /// Control detuning that puts band `n` on two-photon resonance when the
    /// probe is resonant: `Δ_c = −ω_α − n · spacing`.
    pub fn locked_detuning(&self, n: i32) -> f64 {
        -self.stark_shift - n as f64 * self.band_spacing
    }

    pub fn total_power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// EIT couplings `Ω_m = Ω_c A_m e^{i m Φ_s}`.
pub fn eit_couplings(
    drive: &RfDrive,
    medium: &AtomMedium,
    lasers: &LaserParams,
    bands: BandRange,
) -> CouplingSet {
    eit_couplings_with(drive, medium, lasers, bands, Truncation::default())
}

pub fn eit_couplings_with(
    drive: &RfDrive,
    medium: &AtomMedium,
    lasers: &LaserParams,
    bands: BandRange,
    truncation: Truncation,
) -> CouplingSet {
    let width = bands.min().unsigned_abs().max(bands.max().unsigned_abs()) as usize;
    let table = SidebandTable::new(drive, medium, width, truncation);
    let values = bands
        .iter()
        .map(|m| {
            lasers.omega_c_rabi
                * table.get(m)
                * Complex64::from_polar(1.0, m as f64 * drive.phi_s)
        })
        .collect();
    CouplingSet {
        band_range: bands,
        values,
        band_spacing: drive.omega_s,
        stark_shift: stark_shift(drive, medium),
    }
}

/// `L = ω_s / ω_g`, required to be a positive integer within 1e-9 relative.
pub fn commensurate_ratio(omega_s: f64, omega_g: f64) -> Result<i32> {
    let ratio = omega_s / omega_g;
    let l = ratio.round();
    if l < 1.0 || (ratio - l).abs() > 1e-9 * ratio || l > i32::MAX as f64 {
        return Err(Error::Commensurability { ratio });
    }
    Ok(l as i32)
}

/// FEIT couplings for commensurate `ω_s = L ω_g`.
pub fn feit_couplings(
    drive: &RfDrive,
    modulation: &ControlModulation,
    medium: &AtomMedium,
    lasers: &LaserParams,
    bands: BandRange,
) -> Result<CouplingSet> {
    feit_couplings_with(drive, modulation, medium, lasers, bands, Truncation::default())
}

pub fn feit_couplings_with(
    drive: &RfDrive,
    modulation: &ControlModulation,
    medium: &AtomMedium,
    lasers: &LaserParams,
    bands: BandRange,
    truncation: Truncation,
) -> Result<CouplingSet> {
    let l = commensurate_ratio(drive.omega_s, modulation.omega_g)?;
    let phase = drive.phi_s - l as f64 * modulation.phi_g;
    Ok(recombine(drive, modulation, medium, lasers, bands, truncation, l, phase))
}

/// FEIT couplings with a small mismatch `δ_ω = ω_s − L ω_g`, evaluated at
/// time `t` in the quasi-static picture: the path phase becomes
/// `m (δ_ω t + Φ_s − L Φ_g)`.
pub fn feit_couplings_detuned(
    drive: &RfDrive,
    modulation: &ControlModulation,
    medium: &AtomMedium,
    lasers: &LaserParams,
    bands: BandRange,
    t: f64,
) -> Result<CouplingSet> {
    feit_couplings_detuned_with(drive, modulation, medium, lasers, bands, t, Truncation::default())
}

pub fn feit_couplings_detuned_with(
    drive: &RfDrive,
    modulation: &ControlModulation,
    medium: &AtomMedium,
    lasers: &LaserParams,
    bands: BandRange,
    t: f64,
    truncation: Truncation,
) -> Result<CouplingSet> {
    let (l, delta_omega) = detuned_ratio(drive.omega_s, modulation.omega_g)?;
    if delta_omega.abs() > modulation.omega_g / 100.0 {
        log::warn!(
            "detuning {delta_omega:e} rad/s is not small against omega_g = {:e} rad/s",
            modulation.omega_g
        );
    }
    let phase = delta_omega * t + drive.phi_s - l as f64 * modulation.phi_g;
    Ok(recombine(drive, modulation, medium, lasers, bands, truncation, l, phase))
}

/// Nearest integer ratio `L = round(ω_s/ω_g)` and the residual
/// `δ_ω = ω_s − L ω_g`.
pub fn detuned_ratio(omega_s: f64, omega_g: f64) -> Result<(i32, f64)> {
    let ratio = omega_s / omega_g;
    let l = ratio.round();
    if l < 1.0 || l > i32::MAX as f64 {
        return Err(Error::Commensurability { ratio });
    }
    Ok((l as i32, omega_s - l * omega_g))
}

#[allow(clippy::too_many_arguments)]
fn recombine(
    drive: &RfDrive,
    modulation: &ControlModulation,
    medium: &AtomMedium,
    lasers: &LaserParams,
    bands: BandRange,
    truncation: Truncation,
    l: i32,
    path_phase: f64,
) -> CouplingSet {
    // Paths m that reach band n satisfy n − mL ∈ support(g).
    let (g_min, g_max) = modulation
        .coefficients()
        .fold((i32::MAX, i32::MIN), |(lo, hi), (j, _)| (lo.min(j), hi.max(j)));
    let reach = [bands.min() - g_max, bands.max() - g_min]
        .iter()
        .map(|&v| (v.unsigned_abs() as usize).div_ceil(l as usize))
        .max()
        .unwrap_or(0);
    let table = SidebandTable::new(drive, medium, reach, truncation);
    let values = bands
        .iter()
        .map(|n| {
            let sum: Complex64 = modulation
                .coefficients()
                .filter(|&(j, _)| (n - j) % l == 0)
                .map(|(j, g)| {
                    let m = (n - j) / l;
                    g * table.get(m) * Complex64::from_polar(1.0, m as f64 * path_phase)
                })
                .sum();
            lasers.omega_c_rabi * sum
        })
        .collect();
    CouplingSet {
        band_range: bands,
        values,
        band_spacing: modulation.omega_g,
        stark_shift: stark_shift(drive, medium),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwaRatio {
    pub name: &'static str,
    pub value: f64,
}

/// Ratios that must be small for the rotating-wave picture to hold.
#[derive(Debug, Clone, PartialEq)]
pub struct RwaReport {
    pub ratios: Vec<RwaRatio>,
    pub threshold: f64,
}

impl RwaReport {
    pub const DEFAULT_THRESHOLD: f64 = 0.1;

    pub fn passed(&self) -> bool {
        self.ratios.iter().all(|r| r.value <= self.threshold)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &RwaRatio> {
        self.ratios.iter().filter(move |r| r.value > self.threshold)
    }
}

impl std::fmt::Display for RwaReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in &self.ratios {
            let flag = if r.value > self.threshold { "warn" } else { "ok" };
            writeln!(f, "{} = {:.6e} [{}]", r.name, r.value, flag)?;
        }
        write!(f, "rwa = {}", if self.passed() { "pass" } else { "warn" })
    }
}

pub fn check_rwa(
    drive: &RfDrive,
    modulation: Option<&ControlModulation>,
    medium: &AtomMedium,
    lasers: &LaserParams,
) -> RwaReport {
    let mut ratios = vec![RwaRatio {
        name: "omega_c/omega_s",
        value: lasers.omega_c_rabi / drive.omega_s,
    }];
    if let Some(m) = modulation {
        ratios.push(RwaRatio {
            name: "omega_c/omega_g",
            value: lasers.omega_c_rabi / m.omega_g,
        });
    }
    ratios.push(RwaRatio {
        name: "omega_c/omega_32",
        value: lasers.omega_c_rabi / medium.omega_32,
    });
    ratios.push(RwaRatio {
        name: "omega_p/omega_21",
        value: lasers.omega_p_rabi / medium.omega_21,
    });
    RwaReport {
        ratios,
        threshold: RwaReport::DEFAULT_THRESHOLD,
    }
}

/// Length of one RF period, `2π/ω_s`.
pub fn rf_period(drive: &RfDrive) -> f64 {
    2.0 * PI / drive.omega_s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_drive(phi: f64) -> RfDrive {
        RfDrive::new(3.0, 0.5, mhz_to_angular(30.0), phi).unwrap()
    }

    #[test]
    fn drive_validation_and_phase_wrap() {
        assert!(RfDrive::new(-1.0, 0.5, 1.0, 0.0).is_err());
        assert!(RfDrive::new(1.0, -0.5, 1.0, 0.0).is_err());
        assert!(RfDrive::new(1.0, 0.5, 0.0, 0.0).is_err());
        let d = RfDrive::new(1.0, 0.5, 1.0, -0.5 * PI).unwrap();
        assert!((d.phi_s() - 1.5 * PI).abs() < 1e-15);
        let d = d.with_phase(7.0 * PI);
        assert!((d.phi_s() - PI).abs() < 1e-12);
    }

    #[test]
    fn no_rf_means_single_sideband() {
        let d = RfDrive::new(3.0, 0.0, mhz_to_angular(30.0), 0.0).unwrap();
        let t = SidebandTable::new(&d, &AtomMedium::default(), 6, Truncation::default());
        assert_eq!(t.get(0), 1.0);
        for m in 1..=6 {
            assert_eq!(t.get(m), 0.0);
            assert_eq!(t.get(-m), 0.0);
        }
    }

    #[test]
    fn no_dc_kills_odd_sidebands() {
        let d = RfDrive::new(0.0, 2.0, mhz_to_angular(20.0), 0.0).unwrap();
        let medium = AtomMedium::default();
        let (a, _) = bessel_arguments(&d, &medium);
        let t = SidebandTable::new(&d, &medium, 9, Truncation::default());
        for m in -9..=9 {
            if m % 2 != 0 {
                assert_eq!(t.get(m), 0.0);
            } else {
                let want = crate::special::bessel_j(m / 2, a).unwrap();
                assert!((t.get(m) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sideband_weights_are_normalized() {
        let medium = AtomMedium::default();
        for (dc, rf, f) in [(3.0, 0.5, 30.0), (4.0, 3.0, 10.0), (1.0, 2.7, 30.0), (0.0, 3.0, 10.0)] {
            let d = RfDrive::new(dc, rf, mhz_to_angular(f), 0.0).unwrap();
            let t = SidebandTable::complete(&d, &medium, Truncation::default());
            let s: f64 = t.iter().map(|(_, a)| a * a).sum();
            assert!((s - 1.0).abs() < 1e-8, "{dc} {rf} {f}: {s}");
        }
    }

    #[test]
    fn single_coefficient_matches_table() {
        let d = reference_drive(0.0);
        let medium = AtomMedium::default();
        let t = SidebandTable::new(&d, &medium, 4, Truncation::default());
        for m in -4..=4 {
            assert!((sideband_coefficient(&d, &medium, m) - t.get(m)).abs() < 1e-15);
        }
    }

    #[test]
    fn stark_shift_examples() {
        let mut medium = AtomMedium::default();
        let zero = RfDrive::new(0.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(stark_shift(&zero, &medium), 0.0);

        medium.alpha = -TWO_PI * 11.31e6;
        let w = stark_shift(&reference_drive(0.0), &medium);
        assert!((w / (TWO_PI * 1e6) + 51.6).abs() < 0.01, "{}", w / (TWO_PI * 1e6));

        let d1 = RfDrive::new(1.5, 0.0, 1.0, 0.0).unwrap();
        let d2 = RfDrive::new(3.0, 0.0, 1.0, 0.0).unwrap();
        let ratio = stark_shift(&d2, &medium) / stark_shift(&d1, &medium);
        assert!((ratio - 4.0).abs() < 1e-14);
    }

    #[test]
    fn calibration_examples() {
        let target = -TWO_PI * 51.6e6;
        let a = calibrate_alpha(&reference_drive(0.0), target).unwrap();
        assert!((a / (TWO_PI * 1e6) + 51.6 / 4.5625).abs() < 1e-12);
        assert!((a / (TWO_PI * 1e6) + 11.31).abs() < 0.005);

        let d = RfDrive::new(2f64.sqrt(), 0.0, 1.0, 0.0).unwrap();
        let x = 12345.678;
        assert!((calibrate_alpha(&d, x).unwrap() - x).abs() < 1e-9);

        let medium = AtomMedium {
            alpha: a,
            ..AtomMedium::default()
        };
        let back = stark_shift(&reference_drive(0.0), &medium);
        assert!((back / target - 1.0).abs() < 1e-12);

        let zero = RfDrive::new(0.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(calibrate_alpha(&zero, target), Err(Error::Calibration));
    }

    #[test]
    fn eit_without_rf_couples_only_band_zero() {
        let d = RfDrive::new(3.0, 0.0, mhz_to_angular(30.0), 1.0).unwrap();
        let lasers = LaserParams::default();
        let c = eit_couplings(&d, &AtomMedium::default(), &lasers, BandRange::symmetric(3));
        for (n, v) in c.iter() {
            if n == 0 {
                assert!((v - Complex64::new(lasers.omega_c_rabi, 0.0)).norm() < 1e-6);
            } else {
                assert_eq!(v.norm(), 0.0);
            }
        }
        assert_eq!(c.band_spacing, d.omega_s());
    }

    #[test]
    fn eit_moduli_ignore_rf_phase() {
        let medium = AtomMedium::default();
        let lasers = LaserParams::default();
        let bands = BandRange::symmetric(6);
        let base = eit_couplings(&reference_drive(0.0), &medium, &lasers, bands);
        for phi in [PI / 3.0, PI, 1.7 * PI] {
            let other = eit_couplings(&reference_drive(phi), &medium, &lasers, bands);
            for ((_, a), (_, b)) in base.iter().zip(other.iter()) {
                assert!((a.norm() - b.norm()).abs() <= 1e-15 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn eit_parseval() {
        let medium = AtomMedium::default();
        let lasers = LaserParams::default();
        let d = RfDrive::new(4.0, 3.0, mhz_to_angular(10.0), 0.4).unwrap();
        let width = SidebandTable::natural_width(&d, &medium, Truncation::default()) as u32;
        let c = eit_couplings(&d, &medium, &lasers, BandRange::symmetric(width));
        let want = lasers.omega_c_rabi * lasers.omega_c_rabi;
        assert!((c.total_power() / want - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cosine_first_band_matches_three_path_expansion() {
        let medium = AtomMedium::default();
        let lasers = LaserParams::default();
        let omega = mhz_to_angular(30.0);
        let modulation = ControlModulation::cosine(omega, 0.0).unwrap();
        for k in 0..=8 {
            let dphi = k as f64 * PI / 4.0;
            let d = RfDrive::new(3.0, 1.1, omega, dphi).unwrap();
            let c = feit_couplings(&d, &modulation, &medium, &lasers, BandRange::symmetric(2)).unwrap();
            let a = |m| sideband_coefficient(&d, &medium, m);
            let e = |m: f64| Complex64::from_polar(1.0, m * d.phi_s());
            let want = lasers.omega_c_rabi * (a(0) / 4.0 + a(1) * e(1.0) / 2.0 + a(2) * e(2.0) / 4.0);
            let got = c.get(1).unwrap();
            assert!((got.norm_sqr() / want.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_modulation_reduces_to_eit() {
        let medium = AtomMedium::default();
        let lasers = LaserParams::default();
        let d = reference_drive(0.9);
        let modulation = ControlModulation::constant(d.omega_s()).unwrap();
        let bands = BandRange::symmetric(4);
        let feit = feit_couplings(&d, &modulation, &medium, &lasers, bands).unwrap();
        let eit = eit_couplings(&d, &medium, &lasers, bands);
        for ((_, f), (_, e)) in feit.iter().zip(eit.iter()) {
            assert!((f - e).norm() < 1e-9);
        }
    }

    #[test]
    fn incommensurate_modulation_is_rejected() {
        let d = RfDrive::new(3.0, 0.5, mhz_to_angular(30.0), 0.0).unwrap();
        let m = ControlModulation::cosine(mhz_to_angular(7.0), 0.0).unwrap();
        let r = feit_couplings(&d, &m, &AtomMedium::default(), &LaserParams::default(), BandRange::symmetric(2));
        assert!(matches!(r, Err(Error::Commensurability { .. })));
        let m = ControlModulation::cosine(mhz_to_angular(60.0), 0.0).unwrap();
        assert!(commensurate_ratio(d.omega_s(), m.omega_g()).is_err());
        assert_eq!(commensurate_ratio(mhz_to_angular(30.0), mhz_to_angular(10.0)).unwrap(), 3);
    }

    #[test]
    fn detuned_at_time_zero_equals_commensurate() {
        let medium = AtomMedium::default();
        let lasers = LaserParams::default();
        let d = reference_drive(0.6);
        let bands = BandRange::symmetric(2);
        let base = feit_couplings(&d, &ControlModulation::cosine(d.omega_s(), 0.0).unwrap(), &medium, &lasers, bands).unwrap();
        let detuned_mod = ControlModulation::cosine(d.omega_s() - mhz_to_angular(0.005), 0.0).unwrap();
        let at0 = feit_couplings_detuned(&d, &detuned_mod, &medium, &lasers, bands, 0.0).unwrap();
        for ((_, a), (_, b)) in base.iter().zip(at0.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
        let delta = mhz_to_angular(0.005);
        let period = TWO_PI / delta;
        let later = feit_couplings_detuned(&d, &detuned_mod, &medium, &lasers, bands, period).unwrap();
        for ((_, a), (_, b)) in at0.iter().zip(later.iter()) {
            assert!((a - b).norm() < 1e-6 * a.norm().max(1.0));
        }
    }

    #[test]
    fn first_band_is_even_in_total_phase() {
        let medium = AtomMedium::default();
        let lasers = LaserParams::default();
        let delta = mhz_to_angular(0.005);
        let omega = mhz_to_angular(30.0);
        let modulation = ControlModulation::cosine(omega - delta, 0.0).unwrap();
        for (phi, t) in [(0.3, 1.1e-5), (2.0, 7.0e-5), (4.4, 1.3e-4)] {
            let d1 = RfDrive::new(3.0, 1.1, omega, phi).unwrap();
            let d2 = d1.with_phase(TWO_PI - phi);
            let bands = BandRange::symmetric(1);
            let a = feit_couplings_detuned(&d1, &modulation, &medium, &lasers, bands, t).unwrap();
            let b = feit_couplings_detuned(&d2, &modulation, &medium, &lasers, bands, -t).unwrap();
            for n in [-1, 1] {
                let (x, y) = (a.get(n).unwrap().norm_sqr(), b.get(n).unwrap().norm_sqr());
                assert!((x - y).abs() < 1e-9 * x.max(1.0));
            }
        }
    }

    #[test]
    fn rwa_report_examples() {
        let medium = AtomMedium::default();
        let lasers = LaserParams::default();
        let d = reference_drive(0.0);
        let r = check_rwa(&d, None, &medium, &lasers);
        assert!((r.ratios[0].value - 1.0 / 30.0).abs() < 1e-15);
        assert!(r.passed());

        let strong = LaserParams {
            omega_c_rabi: mhz_to_angular(10.0),
            omega_p_rabi: 0.0,
            ..lasers
        };
        let m = ControlModulation::cosine(mhz_to_angular(30.0), 0.0).unwrap();
        let r = check_rwa(&d, Some(&m), &medium, &strong);
        let g = r.ratios.iter().find(|x| x.name == "omega_c/omega_g").unwrap();
        assert!((g.value - 1.0 / 3.0).abs() < 1e-15);
        assert!(!r.passed());
        let p = r.ratios.iter().find(|x| x.name == "omega_p/omega_21").unwrap();
        assert_eq!(p.value, 0.0);
    }

    #[test]
    fn cosine_waveform_shape() {
        let m = ControlModulation::cosine(mhz_to_angular(30.0), 0.7).unwrap();
        assert!(m.is_real_waveform());
        assert_eq!(m.kind(), Waveform::Cosine);
        assert_eq!(m.coefficient(0), Complex64::new(0.5, 0.0));
        assert_eq!(m.coefficient(2), Complex64::default());
        let period = TWO_PI / m.omega_g();
        for i in 0..1000 {
            let t = period * i as f64 / 1000.0;
            let g = m.value(t);
            let want = 0.5 * (1.0 + (m.omega_g() * t + 0.7).cos());
            assert!(g.im.abs() < 1e-15);
            assert!((g.re - want).abs() < 1e-15);
            assert!((-1e-15..=1.0 + 1e-15).contains(&g.re));
        }
    }
}
