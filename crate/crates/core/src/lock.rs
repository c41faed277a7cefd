//! Active stabilization of an interferometer phase.
//!
//! A reference laser fringe is read out once per control period and a PID
//! loop drives a piezo so that the fringe sits at mid-height (quadrature),
//! where the reading is most sensitive to the phase.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::{self, SimRng};

/// Consecutive out-of-range steps after which a running lock is declared lost.
pub const INSTABILITY_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidGains {
    pub kp: f64,
    /// Integral gain (1/s).
    pub ki: f64,
    /// Derivative gain (s).
    pub kd: f64,
    /// Control period (s).
    pub dt: f64,
    pub integral_clamp: f64,
}

impl Default for PidGains {
    /// Synthetic defaults; no gains were published for the real setup.
    fn default() -> Self {
        PidGains { kp: 0.5, ki: 20.0, kd: 0.0, dt: 1e-3, integral_clamp: 1.0 }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        ensure(self.dt > 0.0, "dt", || format!("must be > 0, got {}", self.dt))?;
        ensure(self.integral_clamp > 0.0, "integral_clamp", || format!("must be > 0, got {}", self.integral_clamp))?;
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            ensure(v.is_finite(), name, || "must be finite".into())?;
        }
        Ok(())
    }

    fn is_off(&self) -> bool {
        self.kp == 0.0 && self.ki == 0.0 && self.kd == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftModel {
    /// rad per √step
    pub random_walk_sigma: f64,
    /// rad
    pub slow_sine_amplitude: f64,
    /// s
    pub slow_sine_period: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        DriftModel { random_walk_sigma: 0.01, slow_sine_amplitude: 0.5, slow_sine_period: 600.0 }
    }
}

impl DriftModel {
    pub fn validate(&self) -> Result<()> {
        ensure(self.random_walk_sigma >= 0.0, "random_walk_sigma", || "must be >= 0".into())?;
        ensure(self.slow_sine_amplitude >= 0.0, "slow_sine_amplitude", || "must be >= 0".into())?;
        ensure(self.slow_sine_period > 0.0, "slow_sine_period", || "must be > 0".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorParams {
    pub fringe_visibility: f64,
    pub mean_power: f64,
    pub noise_sigma: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams { fringe_visibility: 0.97, mean_power: 1.0, noise_sigma: 0.0 }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        ensure((0.0..=1.0).contains(&self.fringe_visibility) && self.fringe_visibility > 0.0, "fringe_visibility", || {
            format!("must lie in (0, 1], got {}", self.fringe_visibility)
        })?;
        ensure(self.mean_power > 0.0, "mean_power", || "must be > 0".into())?;
        ensure(self.noise_sigma >= 0.0, "noise_sigma", || "must be >= 0".into())
    }
}

/// Full closed-loop run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LockConfig {
    #[serde(default)]
    pub drift: DriftModel,
    #[serde(default)]
    pub sensor: SensorParams,
    #[serde(default)]
    pub gains: PidGains,
    /// s
    pub duration: f64,
    /// Largest actuator move per control period (rad).
    pub slew_limit: f64,
    /// Phase error at switch-on (rad).
    #[serde(default)]
    pub initial_offset: f64,
}

impl Default for LockConfig {
    fn default() -> Self {
        LockConfig {
            drift: DriftModel::default(),
            sensor: SensorParams::default(),
            gains: PidGains::default(),
            duration: 100.0,
            slew_limit: 0.2,
            initial_offset: 0.0,
        }
    }
}

impl LockConfig {
    pub fn validate(&self) -> Result<()> {
        self.drift.validate().map_err(|e| e.within("drift"))?;
        self.sensor.validate().map_err(|e| e.within("sensor"))?;
        self.gains.validate().map_err(|e| e.within("gains"))?;
        ensure(self.duration > 0.0, "duration", || "must be > 0".into())?;
        ensure(self.slew_limit > 0.0, "slew_limit", || "must be > 0".into())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.gains.dt).round() as usize
    }

    /// Reading at the quadrature point.
    pub fn setpoint(&self) -> f64 {
        self.sensor.mean_power
    }
}

/// Reference-detector reading `P(1 + V cos φ) + noise`.
pub fn fringe_sensor(phase: f64, fringe_visibility: f64, mean_power: f64, noise_sigma: f64, rng: &mut SimRng) -> f64 {
    let noise = if noise_sigma > 0.0 { noise_sigma * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
    mean_power * (1.0 + fringe_visibility * phase.cos()) + noise
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PidState {
    /// Accumulated, clamped integral term.
    pub integral: f64,
    pub previous_error: Option<f64>,
}

/// One PID update. The integral term is clamped to `±integral_clamp`; the
/// derivative term is zero on the first step.
pub fn pid_step(state: PidState, error: f64, gains: &PidGains) -> (f64, PidState) {
    let integral = (state.integral + gains.ki * error * gains.dt).clamp(-gains.integral_clamp, gains.integral_clamp);
    let derivative = state.previous_error.map_or(0.0, |prev| gains.kd * (error - prev) / gains.dt);
    (gains.kp * error + integral + derivative, PidState { integral, previous_error: Some(error) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockRecord {
    pub t: f64,
    pub phase_true: f64,
    pub reading: f64,
    pub control: f64,
    /// Phase minus the quadrature target, not wrapped.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockTrace {
    pub records: Vec<LockRecord>,
}

impl LockTrace {
    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.residual)
    }

    /// RMS residual over the records from `skip` on.
    pub fn residual_rms(&self, skip: usize) -> f64 {
        let tail = &self.records[skip.min(self.records.len())..];
        (tail.iter().map(|r| r.residual * r.residual).sum::<f64>() / tail.len().max(1) as f64).sqrt()
    }
}

/// Simulates the loop for `config.duration` seconds.
///
/// Each period: the drift advances, the sensor reads the fringe, the PID
/// output (normalized so that the error is `-residual` near quadrature) moves
/// the actuator by at most `slew_limit`.
pub fn run_lock(config: &LockConfig, seed: u64) -> Result<LockTrace> {
    config.validate()?;
    let mut rng = rng::seeded(seed, rng::stream::LOCK);
    let gains = &config.gains;
    let sensor = &config.sensor;
    let steps = config.steps();
    let scale = sensor.mean_power * sensor.fringe_visibility;
    let mut walk = 0.0;
    let mut actuator = 0.0;
    let mut state = PidState::default();
    let mut outside = 0usize;
    let mut records = Vec::with_capacity(steps);
    for step in 0..steps {
        let t = step as f64 * gains.dt;
        if config.drift.random_walk_sigma > 0.0 {
            walk += config.drift.random_walk_sigma * rng.sample::<f64, _>(StandardNormal);
        }
        let slow = config.drift.slow_sine_amplitude * (TAU * t / config.drift.slow_sine_period).sin();
        let residual = config.initial_offset + walk + slow + actuator;
        let phase_true = FRAC_PI_2 + residual;
        let reading = fringe_sensor(phase_true, sensor.fringe_visibility, sensor.mean_power, sensor.noise_sigma, &mut rng);
        let error = (reading - config.setpoint()) / scale;
        let (control, next) = pid_step(state, error, gains);
        state = next;
        actuator += control.clamp(-config.slew_limit, config.slew_limit);
        records.push(LockRecord { t, phase_true, reading, control, residual });

        if !gains.is_off() {
            outside = if residual.abs() > std::f64::consts::PI { outside + 1 } else { 0 };
            if outside >= INSTABILITY_WINDOW {
                return Err(Error::Unstable { step, window: INSTABILITY_WINDOW, residual });
            }
        }
    }
    Ok(LockTrace { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sensor_examples() {
        let mut r = rng::seeded(1, 0);
        assert_abs_diff_eq!(fringe_sensor(0.0, 0.97, 2.0, 0.0, &mut r), 3.94, epsilon = 1e-12);
        assert_abs_diff_eq!(fringe_sensor(FRAC_PI_2, 1.0, 2.0, 0.0, &mut r), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn pid_examples() {
        let g = PidGains { kp: 2.0, ki: 0.0, kd: 0.0, dt: 1e-3, integral_clamp: 1.0 };
        let mut s = PidState::default();
        for _ in 0..5 {
            let (u, n) = pid_step(s, 0.3, &g);
            assert_abs_diff_eq!(u, 0.6, epsilon = 1e-15);
            s = n;
        }
        let g = PidGains { kp: 0.0, ki: 100.0, ..g };
        let mut s = PidState::default();
        for k in 1..=20 {
            let (u, n) = pid_step(s, 1.0, &g);
            assert_abs_diff_eq!(u, (0.1 * k as f64).min(1.0), epsilon = 1e-12);
            s = n;
        }
        assert_eq!(s.integral, 1.0);
        let (u, _) = pid_step(PidState::default(), 0.0, &PidGains::default());
        assert_eq!(u, 0.0);
    }

    #[test]
    fn feedback_off_reproduces_drift() {
        let cfg = LockConfig {
            gains: PidGains { kp: 0.0, ki: 0.0, kd: 0.0, ..Default::default() },
            duration: 1.0,
            ..Default::default()
        };
        let trace = run_lock(&cfg, 3).unwrap();
        let mut r = rng::seeded(3, rng::stream::LOCK);
        let mut walk = 0.0;
        for rec in &trace.records {
            walk += cfg.drift.random_walk_sigma * r.sample::<f64, _>(StandardNormal);
            let slow = cfg.drift.slow_sine_amplitude * (TAU * rec.t / cfg.drift.slow_sine_period).sin();
            assert_abs_diff_eq!(rec.residual, walk + slow, epsilon = 1e-12);
        }
    }
}
