use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_8128e-12;

/// Angular frequency (rad/s) of an ordinary frequency given in MHz.
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    TWO_PI * f_mhz * 1e6
}

/// Ordinary frequency in MHz of an angular frequency in rad/s.
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (TWO_PI * 1e6)
}

/// Wrap a phase into `[0, 2π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TWO_PI);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Shortest distance between two phases on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    d.min(TWO_PI - d)
}
