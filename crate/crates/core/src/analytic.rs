//! Closed-form evolution of the PT-balanced linear system (`g = γ`) started
//! from `ψ_A(0) = 1`, `ψ_B(0) = 0`.
//!
//! With `s = κ² − γ²` both amplitudes factor into a carrier `e^{−iω0 t}` and
//! two real envelopes,
//!
//! ```text
//! ψ_B = −iκ e^{−iω0 t} S(t),      ψ_A = e^{−iω0 t} (γ S(t) + C(t))
//! ```
//!
//! where `S = sin(Ωt)/Ω`, `C = cos(Ωt)` with `Ω = √s` below the exceptional
//! point, `S = sinh(Λt)/Λ`, `C = cosh(Λt)` with `Λ = √(−s)` above it, and
//! `S = t`, `C = 1` at it.

#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{classify_region, SpectralRegion, DEFAULT_EP_TOL};
use crate::{Complex, Error, Result};

/// Below this root magnitude the envelopes are summed as power series in `s t²`.
pub const SERIES_SWITCH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolution {
    pub kappa: f64,
    pub gamma: f64,
    pub omega0: f64,
    pub region: SpectralRegion,
}

impl LinearSolution {
    pub fn new(kappa: f64, gamma: f64, omega0: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::invalid("kappa", "must be >= 0"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", "must be >= 0"));
        }
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::invalid("omega0", "must be > 0"));
        }
        Ok(Self {
            kappa,
            gamma,
            omega0,
            region: classify_region(kappa, gamma, DEFAULT_EP_TOL),
        })
    }

    /// `(S(t), C(t))` as described in the module docs.
    pub fn envelopes(&self, t: f64) -> (f64, f64) {
        if self.region == SpectralRegion::ExceptionalPoint {
            return (t, 1.0);
        }
        let s = (self.kappa - self.gamma) * (self.kappa + self.gamma);
        let root = s.abs().sqrt();
        if root < SERIES_SWITCH {
            return series_envelopes(s, t);
        }
        if s > 0.0 {
            let x = root * t;
            (x.sin() / root, x.cos())
        } else {
            let x = root * t;
            (x.sinh() / root, x.cosh())
        }
    }

    fn carrier(&self, t: f64) -> Complex {
        let phase = self.omega0 * t;
        Complex::new(phase.cos(), -phase.sin())
    }

    pub fn psi_b(&self, t: f64) -> Complex {
        let (s, _) = self.envelopes(t);
        self.carrier(t) * Complex::new(0.0, -self.kappa * s)
    }

    pub fn psi_a(&self, t: f64) -> Complex {
        let (s, c) = self.envelopes(t);
        self.carrier(t) * (self.gamma * s + c)
    }

    /// Receiver energy `ω0 κ² S(t)²`.
    pub fn transfer_energy(&self, t: f64) -> f64 {
        let (s, _) = self.envelopes(t);
        self.omega0 * self.kappa * self.kappa * s * s
    }

    /// Battery energy `ω0 (γ S(t) + C(t))²`.
    pub fn storage_energy(&self, t: f64) -> f64 {
        let (s, c) = self.envelopes(t);
        let a = self.gamma * s + c;
        self.omega0 * a * a
    }

    /// Supremum of the receiver energy on `[0, t_end]`.
    ///
    /// Below the exceptional point this is `ω0 κ²/(κ² − γ²)` once the
    /// horizon reaches the first peak at `Ωt = π/2`; otherwise `E` is
    /// monotone and the maximum sits at `t_end`.
    pub fn max_transfer_energy(&self, t_end: f64) -> f64 {
        let s = (self.kappa - self.gamma) * (self.kappa + self.gamma);
        if self.region == SpectralRegion::Unbroken && s.sqrt() >= SERIES_SWITCH {
            let omega = s.sqrt();
            if omega * t_end >= core::f64::consts::FRAC_PI_2 {
                return self.omega0 * self.kappa * self.kappa / s;
            }
        }
        self.transfer_energy(t_end)
    }
}

fn series_envelopes(s: f64, t: f64) -> (f64, f64) {
    // S = t Σ (−s t²)^n / (2n+1)!,  C = Σ (−s t²)^n / (2n)!
    let x = -s * t * t;
    let (mut sum_s, mut sum_c) = (1.0, 1.0);
    let (mut term_s, mut term_c) = (1.0, 1.0);
    for n in 1..64 {
        let n = n as f64;
        term_c *= x / ((2.0 * n - 1.0) * (2.0 * n));
        term_s *= x / ((2.0 * n) * (2.0 * n + 1.0));
        sum_c += term_c;
        sum_s += term_s;
        if term_c.abs() <= f64::EPSILON * sum_c.abs() && term_s.abs() <= f64::EPSILON * sum_s.abs() {
            break;
        }
    }
    (t * sum_s, sum_c)
}
