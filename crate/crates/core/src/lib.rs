//! Simulation and data reduction for Franson-type energy-time entanglement
//! experiments on a resonantly driven biexciton-exciton (XX-X) cascade.
//!
//! The crate is organised along the measurement chain:
//!
//! - [`physics`]: closed-form dressed-state and coherence relations.
//! - [`emission`]: Monte Carlo cascade pair generation with blinking,
//!   pump phase diffusion and uncorrelated background.
//! - [`optics`]: routing through two unbalanced Mach-Zehnder interferometers,
//!   detector models and Michelson fringe scans.
//! - [`analysis`]: coincidence histograms, normalization, blinking-offset
//!   correction, visibility fits and the auxiliary decay/power-law fits.
//! - [`lock`]: active phase stabilization loop.
//! - [`io`] and [`experiment`]: configuration, the FTAG1 tag format and the
//!   end-to-end phase-scan and power-sweep drivers.

pub mod analysis;
pub mod constants;
pub mod emission;
pub mod error;
pub mod experiment;
pub mod io;
pub mod lock;
pub mod optics;
pub mod physics;
pub mod rng;

pub use error::{Error, Result};
