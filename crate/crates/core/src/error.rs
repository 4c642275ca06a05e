use crate::special::MathError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("alpha calibration is singular: eps_dc²/2 + eps_rf²/4 = 0")]
    Calibration,
    #[error("omega_s/omega_g = {ratio} is not a positive integer")]
    Commensurability { ratio: f64 },
    #[error("measured contrast {value} outside the scanned range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },
    #[error("phase scan is not monotone on [0, pi]")]
    NotMonotone,
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("candidate phases {a} and {b} give traces within {margin} rms of each other")]
    Ambiguous { a: f64, b: f64, margin: f64 },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
