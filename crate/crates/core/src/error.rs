use alloc::boxed::Box;
use alloc::string::String;

use crate::dynamics::Trajectory;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{0} is undefined for t <= 0")]
    NonPositiveTime(&'static str),

    #[error("unsupported configuration: {0}")]
    Unsupported(&'static str),

    #[error("no crossing: target {target} is outside the attainable range [{lo}, {hi}]")]
    NoCrossing { target: f64, lo: f64, hi: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64, partial: Box<Trajectory> },

    #[error("amplitude diverged past {limit:e} at t = {t}")]
    Divergence { t: f64, limit: f64, partial: Box<Trajectory> },

    #[error("circuit step failed at t = {t} s: {reason}")]
    CircuitStep { t: f64, reason: &'static str },

    #[error("elliptic modulus k^2 = {0} is outside [0, 1)")]
    EllipticDomain(f64),

    #[error("measurement unavailable: {0}")]
    MeasurementUnavailable(&'static str),

    #[error("waveform undersampled: {per_period:.1} samples per carrier period (need >= 20)")]
    Undersampled { per_period: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Partial trajectory carried by integration failures, if any.
    pub fn partial_trajectory(&self) -> Option<&Trajectory> {
        match self {
            Error::StepUnderflow { partial, .. } | Error::Divergence { partial, .. } => {
                Some(partial)
            }
            _ => None,
        }
    }
}
