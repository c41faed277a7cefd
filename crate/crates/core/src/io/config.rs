use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emission::EmitterConfig;
use crate::error::{ensure, Error, Result};
use crate::lock::LockConfig;
use crate::optics::{DetectorModel, FransonSetup, UnbalancedMZI};
use crate::physics::{Basis, DriveParams, QuantumDotParams};

/// Emitter settings; lifetimes come from `[qd]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmitterSection {
    pub excitation_rate: f64,
    pub blink_off_rate: f64,
    pub blink_on_rate: f64,
    pub pair_contrast_c0: f64,
    pub dephasing_phase_variance: f64,
    pub background_rate: f64,
    pub collection_efficiency: f64,
    /// Acquisition time per phase setting (ps).
    pub duration: f64,
}

impl Default for EmitterSection {
    /// Synthetic emitter giving ~10 kcounts/s per detector behind the
    /// interferometers with a blinking bunching offset of ~10.
    fn default() -> Self {
        EmitterSection {
            excitation_rate: 1.2157e-6,
            blink_off_rate: 1.0 / 5.5e6,
            blink_on_rate: 1.0 / 55e6,
            pair_contrast_c0: 0.8,
            dephasing_phase_variance: 0.09,
            background_rate: 2.33e-7,
            collection_efficiency: 0.0213,
            duration: 10e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsConfig {
    pub mzi1: UnbalancedMZI,
    pub mzi2: UnbalancedMZI,
    pub det1: DetectorModel,
    pub det2: DetectorModel,
    pub basis: Basis,
    #[serde(default)]
    pub lock_phase_sigma: f64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        OpticsConfig {
            mzi1: UnbalancedMZI { label: 1, ..Default::default() },
            mzi2: UnbalancedMZI { label: 2, ..Default::default() },
            det1: DetectorModel::default(),
            det2: DetectorModel::default(),
            basis: Basis::Horizontal,
            lock_phase_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// ps
    pub bin_width: u64,
    /// Histogram range `[min, max)` (ps).
    pub range: (i64, i64),
    /// Post-selection window (ps).
    pub window: (f64, f64),
    /// Number of equally spaced settings of the first interferometer phase over 2π.
    pub phase_steps: usize,
    /// Bin width of the long-delay histogram for the blinking fit (ps).
    pub blink_bin_width: u64,
    /// Half-range of the long-delay histogram (ps).
    pub blink_half_range: i64,
    /// `|τ|` interval used by the blinking fit (ps).
    pub blink_fit_range: (f64, f64),
    /// Length of one independently seeded simulation shard (ps).
    pub shard_duration: f64,
    /// Interferometer (1 or 2) whose phase is stepped; the other keeps its
    /// configured phase.
    pub swept_interferometer: u8,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bin_width: 8,
            range: (-6000, 6000),
            window: (8.0, 1200.0),
            phase_steps: 21,
            blink_bin_width: 100_000,
            blink_half_range: 30_000_000,
            blink_fit_range: (5000.0, 30e6),
            shard_duration: 10e12,
            swept_interferometer: 1,
        }
    }
}

impl AnalysisConfig {
    /// Phases `2πk/phase_steps` applied to the swept interferometer.
    pub fn phases(&self) -> Vec<f64> {
        (0..self.phase_steps).map(|k| TAU * k as f64 / self.phase_steps as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.bin_width > 0, "bin_width", || "must be > 0".into())?;
        let span = self.range.1 - self.range.0;
        ensure(span > 0 && span % self.bin_width as i64 == 0, "range", || {
            format!("[{}, {}) must be a positive multiple of bin_width", self.range.0, self.range.1)
        })?;
        ensure(
            self.window.0 < self.window.1 && self.window.0 >= self.range.0 as f64 && self.window.1 <= self.range.1 as f64,
            "window",
            || format!("[{}, {}] must be non-empty and inside range", self.window.0, self.window.1),
        )?;
        ensure(self.phase_steps >= 4, "phase_steps", || format!("need at least 4 phases, got {}", self.phase_steps))?;
        ensure(self.blink_bin_width > 0 && self.blink_half_range > 0, "blink_bin_width", || "must be > 0".into())?;
        ensure((2 * self.blink_half_range) % self.blink_bin_width as i64 == 0, "blink_half_range", || {
            "twice the half-range must be a multiple of blink_bin_width".into()
        })?;
        ensure(
            self.blink_fit_range.0 >= 0.0
                && self.blink_fit_range.0 < self.blink_fit_range.1
                && self.blink_fit_range.1 <= self.blink_half_range as f64,
            "blink_fit_range",
            || "must satisfy 0 <= inner < outer <= blink_half_range".into(),
        )?;
        ensure(self.shard_duration > 0.0, "shard_duration", || "must be > 0".into())?;
        ensure(matches!(self.swept_interferometer, 1 | 2), "swept_interferometer", || {
            format!("must be 1 or 2, got {}", self.swept_interferometer)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MichelsonConfig {
    /// Coherence time used for synthesis (ps).
    pub t2: f64,
    pub basis: Basis,
    /// Coarse delay step and largest delay (ps).
    pub delay_step: f64,
    pub delay_max: f64,
    pub piezo_steps: usize,
    pub noise_sigma: f64,
}

impl Default for MichelsonConfig {
    fn default() -> Self {
        MichelsonConfig { t2: 508.0, basis: Basis::Horizontal, delay_step: 10.0, delay_max: 1500.0, piezo_steps: 24, noise_sigma: 0.01 }
    }
}

impl MichelsonConfig {
    pub fn delays(&self) -> Vec<f64> {
        let n = (self.delay_max / self.delay_step).floor() as usize;
        (0..=n).map(|k| k as f64 * self.delay_step).collect()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.t2 > 0.0, "t2", || "must be > 0".into())?;
        ensure(self.delay_step > 0.0 && self.delay_max > self.delay_step, "delay_step", || {
            "need 0 < delay_step < delay_max".into()
        })?;
        ensure(self.piezo_steps >= 3, "piezo_steps", || "need at least 3".into())?;
        ensure(self.noise_sigma >= 0.0, "noise_sigma", || "must be >= 0".into())
    }
}

/// Everything a run needs, as read from a TOML document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub qd: QuantumDotParams,
    pub drive: DriveParams,
    pub emitter: EmitterSection,
    pub optics: OpticsConfig,
    pub analysis: AnalysisConfig,
    pub michelson: MichelsonConfig,
    pub lock: LockConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("", e))
    }

    pub fn validate(&self) -> Result<()> {
        self.qd.validate().map_err(|e| e.within("qd"))?;
        self.drive.validate().map_err(|e| e.within("drive"))?;
        self.emitter_config(self.seed).validate().map_err(|e| e.within("emitter"))?;
        self.franson_setup().validate().map_err(|e| e.within("optics"))?;
        self.analysis.validate().map_err(|e| e.within("analysis"))?;
        self.michelson.validate().map_err(|e| e.within("michelson"))?;
        self.lock.validate().map_err(|e| e.within("lock"))
    }

    /// Emitter for the full acquisition time under `seed`.
    pub fn emitter_config(&self, seed: u64) -> EmitterConfig {
        let e = &self.emitter;
        EmitterConfig {
            excitation_rate: e.excitation_rate,
            gamma_xx: 1.0 / self.qd.t1_xx,
            gamma_x: 1.0 / self.qd.t1_x,
            blink_off_rate: e.blink_off_rate,
            blink_on_rate: e.blink_on_rate,
            pair_contrast_c0: e.pair_contrast_c0,
            dephasing_phase_variance: e.dephasing_phase_variance,
            background_rate: e.background_rate,
            collection_efficiency: e.collection_efficiency,
            duration: e.duration,
            seed,
        }
    }

    pub fn franson_setup(&self) -> FransonSetup {
        let o = &self.optics;
        FransonSetup {
            mzi1: o.mzi1,
            mzi2: o.mzi2,
            det1: o.det1,
            det2: o.det2,
            basis: o.basis,
            fss: self.qd.fss,
            pump_coherence_time: self.drive.pump_coherence_time,
            lock_phase_sigma: o.lock_phase_sigma,
        }
    }
}
