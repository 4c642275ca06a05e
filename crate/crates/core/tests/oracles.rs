mod common;

use common::{coefficient_at, coupling_oracle, sideband_oracle};
use feitsim_core::floquet::{
    eit_couplings, feit_couplings, AtomMedium, BandRange, ControlModulation, LaserParams, RfDrive,
    SidebandTable, Truncation, Waveform,
};
use feitsim_core::mhz_to_angular;
use num_complex::Complex64;

fn close(got: Complex64, want: Complex64, rel: f64, floor: f64) -> bool {
    (got - want).norm() <= rel * want.norm() + floor
}

#[test]
fn sideband_weights_match_fft_of_stark_phase() {
    let medium = AtomMedium::default();
    for &(dc, rf, f) in &[(3.0, 0.5, 30.0), (0.0, 2.0, 10.0), (4.0, 3.0, 10.0), (1.0, 0.1, 60.0)] {
        let drive = RfDrive::new(dc, rf, mhz_to_angular(f), 0.0).unwrap();
        let table = SidebandTable::new(&drive, &medium, 12, Truncation::default());
        for (m, oracle) in sideband_oracle(&drive, &medium, 12, 4096) {
            assert!(oracle.im.abs() < 1e-10, "A_{m} should be real: {oracle}");
            let a = Complex64::new(table.get(m), 0.0);
            assert!(close(a, oracle, 1e-6, 1e-12), "({dc}, {rf}, {f}) m={m}: {a} vs {oracle}");
        }
    }
}

#[test]
fn eit_couplings_match_oracle_with_constant_modulation() {
    let medium = AtomMedium::default();
    let lasers = LaserParams::default();
    let drive = RfDrive::new(2.5, 1.2, mhz_to_angular(25.0), 1.1).unwrap();
    let set = eit_couplings(&drive, &medium, &lasers, BandRange::symmetric(6));
    let coeffs = coupling_oracle(&drive, &medium, 1, 0.0, lasers.omega_c_rabi, |_| 1.0.into(), 8192);
    for (m, value) in set.iter() {
        let want = coefficient_at(&coeffs, m);
        assert!(close(value, want, 1e-6, 1e-12 * lasers.omega_c_rabi), "m={m}: {value} vs {want}");
    }
}

#[test]
fn feit_couplings_match_oracle_for_builtin_and_custom_waveforms() {
    let medium = AtomMedium::default();
    let lasers = LaserParams::default();
    let omega_s = mhz_to_angular(30.0);
    let custom = [
        (-2, Complex64::new(0.05, -0.02)),
        (-1, Complex64::new(0.2, 0.1)),
        (0, Complex64::new(0.4, 0.0)),
        (1, Complex64::new(0.2, -0.1)),
        (2, Complex64::new(0.05, 0.02)),
        (3, Complex64::new(0.0, 0.03)),
    ];
    for l in 1..=3 {
        let omega_g = omega_s / l as f64;
        let drive = RfDrive::new(3.0, 0.7, omega_s, 0.9).unwrap();
        let modulations = [
            ControlModulation::cosine(omega_g, 0.4).unwrap(),
            ControlModulation::constant(omega_g).unwrap(),
            ControlModulation::custom(omega_g, 2.0, custom).unwrap(),
        ];
        for modulation in &modulations {
            let set = feit_couplings(&drive, modulation, &medium, &lasers, BandRange::symmetric(8)).unwrap();
            let g = |psi: f64| -> Complex64 {
                match modulation.kind() {
                    Waveform::Cosine => (0.5 * (1.0 + psi.cos())).into(),
                    Waveform::Constant => 1.0.into(),
                    Waveform::Custom => custom
                        .iter()
                        .map(|&(n, c)| c * Complex64::from_polar(1.0, n as f64 * psi))
                        .sum(),
                }
            };
            let coeffs = coupling_oracle(&drive, &medium, l, modulation.phi_g(), lasers.omega_c_rabi, g, 8192);
            for (n, value) in set.iter() {
                let want = coefficient_at(&coeffs, n);
                assert!(
                    close(value, want, 1e-6, 1e-12 * lasers.omega_c_rabi),
                    "L={l} {} n={n}: {value} vs {want}",
                    modulation.kind().name()
                );
            }
        }
    }
}
