//! Shared domain types and the scalar observables built on them.

use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Complex, Error, Result};

/// Relative tolerance used to decide that `|γ| == |κ|`.
pub const DEFAULT_EP_TOL: f64 = 1e-9;

/// Field amplitudes of the battery (`psi_a`) and receiver (`psi_b`)
/// resonators at time `t` (units of `1/ω0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeState {
    pub psi_a: Complex,
    pub psi_b: Complex,
    pub t: f64,
}

impl AmplitudeState {
    pub fn new(psi_a: Complex, psi_b: Complex, t: f64) -> Self {
        Self { psi_a, psi_b, t }
    }

    /// Battery excited with unit amplitude, receiver empty, at `t = 0`.
    pub fn charged_battery() -> Self {
        Self::new(Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.psi_a.is_finite() && self.psi_b.is_finite() && self.t.is_finite()
    }

    /// `|ψ_A|² + |ψ_B|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.psi_a.norm_sqr() + self.psi_b.norm_sqr()
    }
}

impl Default for AmplitudeState {
    fn default() -> Self {
        Self::charged_battery()
    }
}

/// Gain of the battery resonator as a function of its field amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainModel {
    /// Constant gain rate `g`.
    Linear { g: f64 },
    /// Saturable gain `2(g1 + γ1)/(1 + |ψ_A|²) − γ1`.
    NonlinearSaturable { g1: f64, gamma1: f64 },
}

impl GainModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GainModel::Linear { g } if !g.is_finite() => Err(Error::invalid("g", "must be finite")),
            GainModel::NonlinearSaturable { g1, .. } if !(g1 > 0.0 && g1.is_finite()) => {
                Err(Error::invalid("g1", format!("must be > 0, got {g1}")))
            }
            GainModel::NonlinearSaturable { gamma1, .. } if !(gamma1 >= 0.0 && gamma1.is_finite()) => {
                Err(Error::invalid("gamma1", format!("must be >= 0, got {gamma1}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, GainModel::Linear { .. })
    }

    /// Amplitude `|ψ_A|` at which the saturable gain equals `target`, if any.
    pub fn amplitude_at_gain(&self, target: f64) -> Option<f64> {
        match *self {
            GainModel::Linear { .. } => None,
            GainModel::NonlinearSaturable { g1, gamma1 } => {
                let denom = target + gamma1;
                if denom <= 0.0 {
                    return None;
                }
                let sq = 2.0 * (g1 + gamma1) / denom - 1.0;
                (sq >= 0.0).then(|| sq.sqrt())
            }
        }
    }
}

/// Anything that yields a gain rate from the battery amplitude `|ψ_A|`.
///
/// [`GainModel`] is the usual implementor; the circuit module supplies a
/// describing-function gain for the diode network.
pub trait Gain {
    fn rate(&self, psi_a_abs: f64) -> f64;
}

impl Gain for GainModel {
    fn rate(&self, psi_a_abs: f64) -> f64 {
        eval_gain(*self, psi_a_abs)
    }
}

impl<G: Gain + ?Sized> Gain for &G {
    fn rate(&self, psi_a_abs: f64) -> f64 {
        (**self).rate(psi_a_abs)
    }
}

/// Everything needed to write down the 2×2 coupled-mode Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub gain: GainModel,
}

impl SystemParams {
    /// Resonant pair at `ω0 = 1` with PT-balanced linear gain `g = γ`.
    pub fn pt_linear(kappa: f64, gamma: f64) -> Self {
        Self {
            omega_a: 1.0,
            omega_b: 1.0,
            kappa,
            gamma,
            gain: GainModel::Linear { g: gamma },
        }
    }

    /// Resonant pair at `ω0 = 1` with saturable gain.
    pub fn saturable(kappa: f64, gamma: f64, g1: f64, gamma1: f64) -> Self {
        Self {
            omega_a: 1.0,
            omega_b: 1.0,
            kappa,
            gamma,
            gain: GainModel::NonlinearSaturable { g1, gamma1 },
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_a > 0.0 && self.omega_a.is_finite()) {
            return Err(Error::invalid("omega_a", "must be > 0"));
        }
        if !(self.omega_b > 0.0 && self.omega_b.is_finite()) {
            return Err(Error::invalid("omega_b", "must be > 0"));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa", format!("must be >= 0, got {}", self.kappa)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("must be >= 0, got {}", self.gamma)));
        }
        self.gain.validate()
    }

    pub(crate) fn is_resonant(&self) -> bool {
        self.omega_a == self.omega_b
    }
}

/// Which side of the exceptional point a parameter pair sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpectralRegion {
    Unbroken,
    ExceptionalPoint,
    Broken,
}

impl SpectralRegion {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectralRegion::Unbroken => "unbroken",
            SpectralRegion::ExceptionalPoint => "ep",
            SpectralRegion::Broken => "broken",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unbroken" => Some(SpectralRegion::Unbroken),
            "ep" => Some(SpectralRegion::ExceptionalPoint),
            "broken" => Some(SpectralRegion::Broken),
            _ => None,
        }
    }
}

impl core::fmt::Display for SpectralRegion {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluate the gain rate at battery amplitude `psi_a_abs`.
pub fn eval_gain(gain: GainModel, psi_a_abs: f64) -> f64 {
    match gain {
        GainModel::Linear { g } => g,
        GainModel::NonlinearSaturable { g1, gamma1 } => {
            2.0 * (g1 + gamma1) / (1.0 + psi_a_abs * psi_a_abs) - gamma1
        }
    }
}

/// Classify `(κ, γ)`; the exceptional point is matched with relative
/// tolerance `tol` scaled by `max(|γ|, |κ|, 1)`.
pub fn classify_region(kappa: f64, gamma: f64, tol: f64) -> SpectralRegion {
    let (k, g) = (kappa.abs(), gamma.abs());
    let scale = k.max(g).max(1.0);
    if (g - k).abs() <= tol * scale {
        SpectralRegion::ExceptionalPoint
    } else if g < k {
        SpectralRegion::Unbroken
    } else {
        SpectralRegion::Broken
    }
}

/// Energy held by the receiver, `ω_B |ψ_B|²`.
pub fn transfer_energy(state: &AmplitudeState, omega_b: f64) -> f64 {
    omega_b * state.psi_b.norm_sqr()
}

/// Average transfer power `E/t`.
pub fn average_power(energy: f64, t: f64) -> Result<f64> {
    if t > 0.0 {
        Ok(energy / t)
    } else {
        Err(Error::NonPositiveTime("average power"))
    }
}
