//! Special functions and quadrature used by the physics modules.

mod bessel;
mod faddeeva;
mod hermite;

pub use bessel::{bessel_j, bessel_j_symmetric, bessel_j_table};
pub use faddeeva::{faddeeva, gaussian_cauchy_integral, gaussian_cauchy_integral_sq};
pub use hermite::{gauss_hermite, QuadratureRule, MAX_ORDER as MAX_QUADRATURE_ORDER, MIN_ORDER as MIN_QUADRATURE_ORDER};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MathError {
    #[error("non-finite argument {0}")]
    NonFiniteArgument(f64),
    #[error("quadrature order {0} outside [2, 256]")]
    QuadratureOrder(usize),
}
