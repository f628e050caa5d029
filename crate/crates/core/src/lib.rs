//! Two coupled resonators with balanced gain and loss: closed-form linear
//! solutions, saturable-gain dynamics, coil coupling versus distance, sweep
//! and step scenarios, and an LRC circuit simulator used to cross-check the
//! coupled-mode picture.
//!
//! Rates and frequencies are dimensionless (units of the common resonant
//! frequency `ω0`) everywhere except in [`coupling`] and [`circuit`], which
//! work in SI units and convert at their boundary.
//!
//! The crate is `no_std` and only needs `alloc`. IO, file formats and the
//! command-line front end live in the `nhqb` crate.

#![no_std]

extern crate alloc;

// Modules import `num_traits::Float` for the float math. Whenever std is
// linked into the build (tests, std dev-dependencies) its inherent methods
// win and the import looks unused, hence the per-import allows.

#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod circuit;
pub mod coupling;
pub mod dynamics;
pub mod elliptic;
pub mod envelope;
mod error;
pub mod model;
pub mod ode;
pub mod scenarios;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{
    average_power, classify_region, eval_gain, transfer_energy, AmplitudeState, Gain, GainModel,
    SpectralRegion, SystemParams, DEFAULT_EP_TOL,
};

/// Double-precision complex number used for all field amplitudes.
pub type Complex = num_complex::Complex64;
