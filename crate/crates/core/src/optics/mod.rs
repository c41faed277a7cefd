//! Interferometers and detectors.

mod detector;
mod franson;
mod michelson;

use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT_M_PS;
use crate::error::{ensure, Result};

pub use detector::apply_detector;
pub use franson::{direct_detect, franson_route_and_detect, FransonSetup, DELAY_MATCH_TOLERANCE_PS};
pub use michelson::{fringe_visibility, michelson_fringe_scan, FringeRecord, MichelsonScan};

/// Channel of the detector behind the XX interferometer.
pub const CHANNEL_XX: u8 = 0;
/// Channel of the detector behind the X interferometer.
pub const CHANNEL_X: u8 = 1;
/// Reference detector of the stabilization laser.
pub const CHANNEL_REFERENCE: u8 = 2;

/// One detection: channel and arrival time in integer ps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeTag {
    pub channel: u8,
    pub time: u64,
}

impl TimeTag {
    pub fn new(channel: u8, time: u64) -> Self {
        TimeTag { channel, time }
    }
}

/// Unbalanced Mach-Zehnder interferometer. Arm lengths in m, phase in rad.
///
/// The light passes each arm twice (folded geometry), so the path
/// difference is `2(L - S)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnbalancedMZI {
    pub long_arm: f64,
    pub short_arm: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub label: u8,
}

impl Default for UnbalancedMZI {
    fn default() -> Self {
        UnbalancedMZI { long_arm: 0.25, short_arm: 0.035, phase: 0.0, label: 1 }
    }
}

impl UnbalancedMZI {
    pub fn validate(&self) -> Result<()> {
        ensure(self.short_arm > 0.0, "short_arm", || format!("must be > 0, got {}", self.short_arm))?;
        ensure(self.long_arm > self.short_arm, "long_arm", || {
            format!("must exceed short_arm {}, got {}", self.short_arm, self.long_arm)
        })?;
        ensure(self.phase.is_finite(), "phase", || "must be finite".into())
    }

    pub fn with_phase(self, phase: f64) -> Self {
        UnbalancedMZI { phase, ..self }
    }
}

/// Arrival-time difference `2(L - S)/c` between the arms (ps).
pub fn delay_difference(mzi: &UnbalancedMZI) -> f64 {
    2.0 * (mzi.long_arm - mzi.short_arm) / SPEED_OF_LIGHT_M_PS
}

/// Single-photon detector. Times in ps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorModel {
    pub jitter_sigma: f64,
    pub efficiency: f64,
    #[serde(default)]
    pub dead_time: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel { jitter_sigma: 30.0, efficiency: 0.85, dead_time: 0.0 }
    }
}

impl DetectorModel {
    /// Lossless, jitter-free detector without dead time.
    pub fn ideal() -> Self {
        DetectorModel { jitter_sigma: 0.0, efficiency: 1.0, dead_time: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.jitter_sigma >= 0.0, "jitter_sigma", || format!("must be >= 0, got {}", self.jitter_sigma))?;
        ensure((0.0..=1.0).contains(&self.efficiency), "efficiency", || {
            format!("must lie in [0, 1], got {}", self.efficiency)
        })?;
        ensure(self.dead_time >= 0.0, "dead_time", || format!("must be >= 0, got {}", self.dead_time))
    }
}
