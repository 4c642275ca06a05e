//! Simulation of phase-sensitive Rydberg-atom interferometry with Floquet
//! electromagnetically induced transparency (FEIT).
//!
//! The crate is organized bottom-up:
//!
//! * [`special`]: Bessel functions, the Faddeeva function and Gauss-Hermite rules.
//! * [`floquet`]: RF drive, control modulation, sideband weights and the
//!   EIT/FEIT effective couplings.
//! * [`spectroscopy`]: Doppler-averaged susceptibility, Beer-Lambert
//!   transmission and control-detuning sweeps.
//! * [`protocols`]: phase and amplitude measurement procedures, the
//!   Monte-Carlo noise model and accuracy estimators.
//! * [`config`]: the line-oriented run configuration shared with the CLI.

pub mod config;
pub mod error;
pub mod floquet;
pub mod protocols;
pub mod special;
pub mod spectroscopy;
mod units;

pub use error::{Error, Result};
pub use units::*;
