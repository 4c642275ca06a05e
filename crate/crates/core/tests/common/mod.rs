//! Time-domain oracles shared by the integration tests.
//!
//! Nothing here calls into the library's sideband or coupling code: the Stark
//! phase is obtained by integrating the instantaneous shift numerically and
//! the Fourier coefficients come from an FFT.

#![allow(dead_code)]

use feitsim_core::floquet::{AtomMedium, RfDrive};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Instantaneous Stark rate `(α ε(θ)²/2 − ω_α)/ω_s` in rad per radian of
/// RF phase.
fn stark_rate(drive: &RfDrive, medium: &AtomMedium, theta: f64) -> f64 {
    let (dc, rf) = (drive.eps_dc(), drive.eps_rf());
    let mean = medium.alpha * (dc * dc / 2.0 + rf * rf / 4.0);
    let e = dc + rf * theta.cos();
    (medium.alpha * e * e / 2.0 - mean) / drive.omega_s()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = (panels.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Stark phase `φ(θ) = ∫₀^θ rate` at `θ_j = θ₀ + j·step`, `j < count`,
/// accumulated panel by panel.
pub fn stark_phase_on_grid(
    drive: &RfDrive,
    medium: &AtomMedium,
    theta0: f64,
    step: f64,
    count: usize,
) -> Vec<f64> {
    let rate = |th: f64| stark_rate(drive, medium, th);
    let mut phi = simpson(rate, 0.0, theta0, 4096);
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        if j > 0 {
            let from = theta0 + (j - 1) as f64 * step;
            phi += simpson(rate, from, from + step, 16);
        }
        out.push(phi);
    }
    out
}

/// Forward DFT normalized so that entry `k` is the coefficient of
/// `e^{+i k x}` in samples taken at `x_j = 2πj/n`.
pub fn fourier_coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut fwd = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut fwd);
    fwd.iter().map(|c| c / n as f64).collect()
}

pub fn coefficient_at(coeffs: &[Complex64], k: i32) -> Complex64 {
    let n = coeffs.len() as i32;
    coeffs[k.rem_euclid(n) as usize]
}

/// Sideband weights `A_m`, `|m| ≤ m_max`, from an FFT of `e^{iφ(θ)}` over
/// one RF period.
pub fn sideband_oracle(drive: &RfDrive, medium: &AtomMedium, m_max: i32, n: usize) -> Vec<(i32, Complex64)> {
    let step = std::f64::consts::TAU / n as f64;
    let samples: Vec<Complex64> = stark_phase_on_grid(drive, medium, 0.0, step, n)
        .into_iter()
        .map(|phi| Complex64::from_polar(1.0, phi))
        .collect();
    let coeffs = fourier_coefficients(&samples);
    (-m_max..=m_max).map(|m| (m, coefficient_at(&coeffs, m))).collect()
}

/// Coefficients of `Ω_c g(ψ) e^{iφ(θ)}` in `e^{+i n ψ}` over one modulation
/// period, with `ψ = ω_g t + Φ_g` and `θ = L ψ + (Φ_s − L Φ_g)`. The caller
/// supplies `g` as a function of `ψ`.
pub fn coupling_oracle(
    drive: &RfDrive,
    medium: &AtomMedium,
    l: i32,
    phi_g: f64,
    omega_c: f64,
    g: impl Fn(f64) -> Complex64,
    n: usize,
) -> Vec<Complex64> {
    let offset = drive.phi_s() - l as f64 * phi_g;
    let dpsi = std::f64::consts::TAU / n as f64;
    let phases = stark_phase_on_grid(drive, medium, offset, l as f64 * dpsi, n);
    let samples: Vec<Complex64> = phases
        .into_iter()
        .enumerate()
        .map(|(j, phi)| omega_c * g(j as f64 * dpsi) * Complex64::from_polar(1.0, phi))
        .collect();
    fourier_coefficients(&samples)
}
