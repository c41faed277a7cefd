//! Monte Carlo generation of cascade photon pairs.
//!
//! The emitter is a renewal process: from the ground state it is excited at
//! `excitation_rate`, emits the XX photon after an exponential biexciton
//! lifetime and the X photon after a further exponential exciton lifetime,
//! then returns to the ground state. Blinking suspends the process, and an
//! uncorrelated Poisson background adds single photons on either channel.

mod telegraph;

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::physics::{DriveParams, QuantumDotParams};
use crate::rng::{self, SimRng};

pub use telegraph::{blink_telegraph, BlinkInterval, Telegraph};

/// Which photons of an event reached the collection optics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Photons {
    Both,
    XxOnly,
    XOnly,
}

impl Photons {
    pub fn has_xx(self) -> bool {
        matches!(self, Photons::Both | Photons::XxOnly)
    }

    pub fn has_x(self) -> bool {
        matches!(self, Photons::Both | Photons::XOnly)
    }
}

/// One emission record. Times in ps, phases in rad.
///
/// For single-photon events only the time of the present photon is
/// meaningful; background events carry the same value in both fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairEvent {
    pub t_xx: f64,
    pub t_x: f64,
    /// `2·φ_pump(t_e) + dephasing_kick`, wrapped to `[0, 2π)`.
    pub pair_phase: f64,
    /// The pure-dephasing part of `pair_phase`.
    pub dephasing_kick: f64,
    pub from_cascade: bool,
    pub photons: Photons,
}

/// Emitter configuration. Rates in 1/ps, times in ps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub excitation_rate: f64,
    pub gamma_xx: f64,
    pub gamma_x: f64,
    /// Rate of on→off switching.
    pub blink_off_rate: f64,
    /// Rate of off→on switching.
    pub blink_on_rate: f64,
    pub pair_contrast_c0: f64,
    pub dephasing_phase_variance: f64,
    /// Background rate per channel while the emitter is on.
    pub background_rate: f64,
    /// Probability that an emitted photon enters the collection optics.
    /// Cycles where neither photon is collected are not recorded.
    #[serde(default = "one")]
    pub collection_efficiency: f64,
    pub duration: f64,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl EmitterConfig {
    /// Configuration with the lifetimes of `qd`, no blinking, no background,
    /// full collection and unit contrast.
    pub fn for_dot(qd: &QuantumDotParams, excitation_rate: f64, duration: f64, seed: u64) -> Self {
        EmitterConfig {
            excitation_rate,
            gamma_xx: 1.0 / qd.t1_xx,
            gamma_x: 1.0 / qd.t1_x,
            blink_off_rate: 0.0,
            blink_on_rate: 0.0,
            pair_contrast_c0: 1.0,
            dephasing_phase_variance: 0.0,
            background_rate: 0.0,
            collection_efficiency: 1.0,
            duration,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("excitation_rate", self.excitation_rate),
            ("blink_off_rate", self.blink_off_rate),
            ("blink_on_rate", self.blink_on_rate),
            ("background_rate", self.background_rate),
            ("dephasing_phase_variance", self.dephasing_phase_variance),
        ];
        for (name, value) in rates {
            ensure(value >= 0.0 && value.is_finite(), name, || format!("must be finite and >= 0, got {value}"))?;
        }
        for (name, value) in [("gamma_xx", self.gamma_xx), ("gamma_x", self.gamma_x)] {
            ensure(value > 0.0 && value.is_finite(), name, || format!("must be finite and > 0, got {value}"))?;
        }
        ensure((0.0..=1.0).contains(&self.pair_contrast_c0), "pair_contrast_c0", || {
            format!("must lie in [0, 1], got {}", self.pair_contrast_c0)
        })?;
        ensure(self.collection_efficiency > 0.0 && self.collection_efficiency <= 1.0, "collection_efficiency", || {
            format!("must lie in (0, 1], got {}", self.collection_efficiency)
        })?;
        ensure(self.duration > 0.0 && self.duration.is_finite(), "duration", || {
            format!("must be finite and > 0, got {}", self.duration)
        })?;
        ensure(self.excitation_rate > 0.0 || self.background_rate > 0.0, "excitation_rate", || {
            "excitation_rate and background_rate are both zero; the stream would be empty".into()
        })
    }

    /// Long-run fraction of time spent in the on state.
    pub fn on_fraction(&self) -> f64 {
        if self.blink_off_rate == 0.0 {
            1.0
        } else if self.blink_on_rate == 0.0 {
            0.0
        } else {
            let (t_on, t_off) = (1.0 / self.blink_off_rate, 1.0 / self.blink_on_rate);
            t_on / (t_on + t_off)
        }
    }

    /// Mean cascade-cycle rate (1/ps) including uncollected cycles.
    pub fn mean_cycle_rate(&self) -> f64 {
        if self.excitation_rate == 0.0 {
            return 0.0;
        }
        self.on_fraction() / (1.0 / self.excitation_rate + 1.0 / self.gamma_xx + 1.0 / self.gamma_x)
    }

    /// The blinking intervals this configuration simulates.
    pub fn telegraph(&self) -> Vec<BlinkInterval> {
        blink_telegraph(self.blink_on_rate, self.blink_off_rate, self.duration, self.seed)
    }
}

/// Simulated emission record.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStream {
    /// Sorted by `t_xx`.
    pub events: Vec<PairEvent>,
    pub duration: f64,
    /// Intrinsic Franson contrast of the cascade pairs.
    pub pair_contrast: f64,
}

/// Gaussian increment of the single-photon pump phase over `tau` ps.
///
/// Variance `2·tau/τ_c`, so `<e^{iΔφ}> = e^{-tau/τ_c}` as for a Lorentzian
/// laser line.
pub fn sample_pump_phase_increment<R: Rng + ?Sized>(tau: f64, pump_coherence_time: f64, rng: &mut R) -> f64 {
    if tau <= 0.0 || pump_coherence_time.is_infinite() {
        return 0.0;
    }
    let z: f64 = rng.sample(StandardNormal);
    z * (2.0 * tau / pump_coherence_time).sqrt()
}

struct Cascade<'a> {
    config: &'a EmitterConfig,
    coherence_time: f64,
    rng: SimRng,
    /// Single-photon pump phase and the time it refers to.
    pump_phase: f64,
    pump_time: f64,
    success: Option<Geometric>,
    p_both: f64,
}

impl<'a> Cascade<'a> {
    fn new(config: &'a EmitterConfig, drive: &DriveParams) -> Self {
        let eta = config.collection_efficiency;
        let q = 1.0 - (1.0 - eta) * (1.0 - eta);
        Cascade {
            config,
            coherence_time: drive.pump_coherence_time,
            rng: rng::seeded(config.seed, rng::stream::CASCADE),
            pump_phase: 0.0,
            pump_time: 0.0,
            success: (q < 1.0).then(|| Geometric::new(q).expect("probability in (0, 1)")),
            p_both: eta * eta / q,
        }
    }

    fn exp(&mut self, mean: f64) -> f64 {
        self.rng.sample::<f64, _>(Exp1) * mean
    }

    /// Total duration of `n` complete cycles.
    fn skipped_cycles(&mut self, n: u64) -> f64 {
        let shape = n as f64;
        let c = self.config;
        [1.0 / c.excitation_rate, 1.0 / c.gamma_xx, 1.0 / c.gamma_x]
            .into_iter()
            .map(|mean| Gamma::new(shape, mean).expect("positive shape and scale").sample(&mut self.rng))
            .sum()
    }

    fn pump_phase_at(&mut self, t: f64) -> f64 {
        let step = sample_pump_phase_increment(t - self.pump_time, self.coherence_time, &mut self.rng);
        self.pump_phase = (self.pump_phase + step).rem_euclid(TAU);
        self.pump_time = t;
        self.pump_phase
    }

    /// Appends the collected cycles completed within `[start, end)`.
    fn run_interval(&mut self, start: f64, end: f64, out: &mut Vec<PairEvent>) {
        let c = self.config;
        let mut t = start;
        loop {
            let skipped = match self.success {
                Some(g) => g.sample(&mut self.rng),
                None => 0,
            };
            if skipped > 0 {
                t += self.skipped_cycles(skipped);
                if t >= end {
                    return;
                }
            }
            let t_e = t + self.exp(1.0 / c.excitation_rate);
            let t_xx = t_e + self.exp(1.0 / c.gamma_xx);
            let t_x = t_xx + self.exp(1.0 / c.gamma_x);
            if t_x >= end {
                return;
            }
            t = t_x;
            let photons = if self.success.is_none() {
                Photons::Both
            } else {
                let u: f64 = self.rng.random();
                let single = 0.5 * (1.0 - self.p_both);
                if u < self.p_both {
                    Photons::Both
                } else if u < self.p_both + single {
                    Photons::XxOnly
                } else {
                    Photons::XOnly
                }
            };
            let kick = if c.dephasing_phase_variance > 0.0 {
                self.rng.sample::<f64, _>(StandardNormal) * c.dephasing_phase_variance.sqrt()
            } else {
                0.0
            };
            let pump = self.pump_phase_at(t_e);
            out.push(PairEvent {
                t_xx,
                t_x,
                pair_phase: (2.0 * pump + kick).rem_euclid(TAU),
                dephasing_kick: kick,
                from_cascade: true,
                photons,
            });
        }
    }
}

fn background_interval(rng: &mut SimRng, rate: f64, start: f64, end: f64, out: &mut Vec<PairEvent>) {
    for photons in [Photons::XxOnly, Photons::XOnly] {
        let mut t = start;
        loop {
            t += rng.sample::<f64, _>(Exp1) / rate;
            if t >= end {
                break;
            }
            out.push(PairEvent { t_xx: t, t_x: t, pair_phase: 0.0, dephasing_kick: 0.0, from_cascade: false, photons });
        }
    }
}

/// Simulates the emission record of one emitter for `config.duration` ps.
///
/// Each on interval restarts the cascade from the ground state; a cycle
/// still running when the emitter switches off is discarded. Background
/// photons arrive only while the emitter is on, so their correlations carry
/// the same blinking envelope as the cascade light.
pub fn simulate_pair_stream(config: &EmitterConfig, drive: &DriveParams) -> Result<PairStream> {
    config.validate()?;
    drive.validate().map_err(|e| e.within("drive"))?;
    let mut telegraph_rng = rng::seeded(config.seed, rng::stream::TELEGRAPH);
    let mut background_rng = rng::seeded(config.seed, rng::stream::BACKGROUND);
    let mut cascade = Cascade::new(config, drive);

    let expected = config.duration * (config.mean_cycle_rate() + 2.0 * config.background_rate * config.on_fraction());
    let mut events = Vec::with_capacity((expected * 1.05) as usize + 16);
    let telegraph = Telegraph::new(&mut telegraph_rng, config.blink_on_rate, config.blink_off_rate, config.duration);
    for interval in telegraph.filter(|i| i.on) {
        let first = events.len();
        if config.excitation_rate > 0.0 {
            cascade.run_interval(interval.start, interval.end, &mut events);
        }
        if config.background_rate > 0.0 {
            background_interval(&mut background_rng, config.background_rate, interval.start, interval.end, &mut events);
            events[first..].sort_by(|a, b| a.t_xx.total_cmp(&b.t_xx));
        }
    }
    if events.is_empty() {
        log::warn!("simulated stream of {} ps contains no events", config.duration);
    }
    Ok(PairStream { events, duration: config.duration, pair_contrast: config.pair_contrast_c0 })
}

impl PairStream {
    /// Checks that the stream is non-empty.
    pub fn require_events(&self) -> Result<&[PairEvent]> {
        if self.events.is_empty() {
            return Err(Error::EmptyStream("no emission events".into()));
        }
        Ok(&self.events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(seed: u64) -> EmitterConfig {
        EmitterConfig::for_dot(&QuantumDotParams::default(), 1e-3, 1e7, seed)
    }

    #[test]
    fn rejects_empty_configuration() {
        let mut c = quick(1);
        c.excitation_rate = 0.0;
        assert!(matches!(simulate_pair_stream(&c, &DriveParams::default()), Err(Error::Config { .. })));
        c.background_rate = 1e-6;
        assert!(simulate_pair_stream(&c, &DriveParams::default()).is_ok());
    }

    #[test]
    fn deterministic_per_seed() {
        let d = DriveParams::default();
        let a = simulate_pair_stream(&quick(3), &d).unwrap();
        let b = simulate_pair_stream(&quick(3), &d).unwrap();
        let c = simulate_pair_stream(&quick(4), &d).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn pump_increment_statistics() {
        let mut r = rng::seeded(11, 0);
        assert_eq!(sample_pump_phase_increment(0.0, 1e3, &mut r), 0.0);
        let n = 100_000;
        let var: f64 = (0..n).map(|_| sample_pump_phase_increment(1e3, 1e3, &mut r).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 2.0).abs() < 0.05, "{var}");
        assert_eq!(sample_pump_phase_increment(1e3, f64::INFINITY, &mut r), 0.0);
    }

    #[test]
    fn partial_collection_keeps_photon_ratio() {
        let mut c = quick(8);
        c.collection_efficiency = 0.2;
        c.duration = 1e9;
        let s = simulate_pair_stream(&c, &DriveParams::default()).unwrap();
        let both = s.events.iter().filter(|e| e.photons == Photons::Both).count() as f64;
        let n = s.events.len() as f64;
        // P(both | at least one) = η²/(1 - (1-η)²) = 0.04/0.36.
        let p = 0.04 / 0.36;
        assert!((both / n - p).abs() < 4.0 * (p * (1.0 - p) / n).sqrt());
        let expected = c.mean_cycle_rate() * c.duration * 0.36;
        assert!((n - expected).abs() < 4.0 * expected.sqrt(), "{n} vs {expected}");
    }
}
