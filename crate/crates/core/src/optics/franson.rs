use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{apply_detector, delay_difference, DetectorModel, TimeTag, UnbalancedMZI, CHANNEL_X, CHANNEL_XX};
use crate::constants::PLANCK_EV_PS;
use crate::emission::{sample_pump_phase_increment, PairStream};
use crate::error::{Error, Result};
use crate::physics::Basis;
use crate::rng::SimRng;

/// Largest accepted difference between the two interferometer delays (ps).
pub const DELAY_MATCH_TOLERANCE_PS: f64 = 8.0;

/// Everything between the emitter and the time tagger.
///
/// The XX photon enters `mzi1` and is detected on channel 0, the X photon
/// enters `mzi2` and is detected on channel 1. With `τ = t_X - t_XX` the
/// (S₁, L₂) class appears at `+ΔT` and (L₁, S₂) at `-ΔT`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FransonSetup {
    pub mzi1: UnbalancedMZI,
    pub mzi2: UnbalancedMZI,
    pub det1: DetectorModel,
    pub det2: DetectorModel,
    pub basis: Basis,
    /// Fine-structure splitting (eV).
    pub fss: f64,
    /// Pump coherence time (ps).
    pub pump_coherence_time: f64,
    /// Standard deviation of residual lock jitter added to the two-photon phase (rad).
    #[serde(default)]
    pub lock_phase_sigma: f64,
}

impl FransonSetup {
    pub fn validate(&self) -> Result<()> {
        self.mzi1.validate().map_err(|e| e.within("mzi1"))?;
        self.mzi2.validate().map_err(|e| e.within("mzi2"))?;
        self.det1.validate().map_err(|e| e.within("det1"))?;
        self.det2.validate().map_err(|e| e.within("det2"))?;
        let mismatch = (delay_difference(&self.mzi1) - delay_difference(&self.mzi2)).abs();
        if mismatch > DELAY_MATCH_TOLERANCE_PS {
            return Err(Error::config(
                "mzi2.long_arm",
                format!("interferometer delays differ by {mismatch:.1} ps (tolerance {DELAY_MATCH_TOLERANCE_PS} ps)"),
            ));
        }
        if self.fss < 0.0 {
            return Err(Error::config("fss", format!("must be >= 0, got {}", self.fss)));
        }
        if !(self.pump_coherence_time > 0.0) {
            return Err(Error::config("pump_coherence_time", "must be > 0"));
        }
        Ok(())
    }

    /// Weight of interfering (central-class) registration for a pair whose
    /// exciton lived `dwell` ps.
    pub fn fss_weight(&self, dwell: f64) -> f64 {
        if self.basis.is_diagonal() {
            (PI * self.fss * dwell / PLANCK_EV_PS + self.basis.beat_offset()).cos().powi(2)
        } else {
            1.0
        }
    }
}

/// Routes every photon through its interferometer and detector.
///
/// Side classes exit the monitored port independently with probability 1/2.
/// For the central classes (S₁S₂, L₁L₂) one joint outcome is drawn with
/// `p11 = p00 = (1 + C·cos Φ)/4` and `p10 = p01 = 1/2 - p11`, where
/// `Φ = φ₁ + φ₂ + 2Δφ_pump(ΔT) + kick`; each marginal stays at 1/2. In a
/// diagonal basis only the fraction `fss_weight` of central pairs follows that
/// table, the rest exit anticorrelated.
pub fn franson_route_and_detect(stream: &PairStream, setup: &FransonSetup, rng: &mut SimRng) -> Result<Vec<TimeTag>> {
    setup.validate()?;
    let delay1 = delay_difference(&setup.mzi1);
    let delay2 = delay_difference(&setup.mzi2);
    let pump_delay = 0.5 * (delay1 + delay2);
    let phase_sum = setup.mzi1.phase + setup.mzi2.phase;

    let mut xx = Vec::with_capacity(stream.events.len() / 2 + 8);
    let mut x = Vec::with_capacity(stream.events.len() / 2 + 8);
    let tag = |channel: u8, t: f64| TimeTag { channel, time: t.round().max(0.0) as u64 };

    for event in &stream.events {
        if !event.photons.has_xx() || !event.photons.has_x() {
            let (t, delay, out, channel) = if event.photons.has_xx() {
                (event.t_xx, delay1, &mut xx, CHANNEL_XX)
            } else {
                (event.t_x, delay2, &mut x, CHANNEL_X)
            };
            let u: f64 = rng.random();
            if u < 0.5 {
                out.push(tag(channel, if u < 0.25 { t } else { t + delay }));
            }
            continue;
        }
        let u: f64 = rng.random();
        let long1 = u < 0.5;
        let long2 = (u * 4.0) % 2.0 >= 1.0;
        let t1 = if long1 { event.t_xx + delay1 } else { event.t_xx };
        let t2 = if long2 { event.t_x + delay2 } else { event.t_x };
        let (pass1, pass2) = if long1 != long2 {
            let v: f64 = rng.random();
            (v < 0.5, (v * 4.0) % 2.0 >= 1.0)
        } else {
            let contrast = if event.from_cascade { stream.pair_contrast } else { 0.0 };
            let w = setup.fss_weight(event.t_x - event.t_xx);
            let coherent = w >= 1.0 || rng.random::<f64>() < w;
            let p11 = if coherent {
                let mut phi = phase_sum + event.dephasing_kick;
                phi += 2.0 * sample_pump_phase_increment(pump_delay, setup.pump_coherence_time, rng);
                if setup.lock_phase_sigma > 0.0 {
                    phi += setup.lock_phase_sigma * rng.sample::<f64, _>(StandardNormal);
                }
                0.25 * (1.0 + contrast * phi.cos())
            } else {
                0.0
            };
            let v: f64 = rng.random();
            if v < p11 {
                (true, true)
            } else if v < 2.0 * p11 {
                (false, false)
            } else if v < 0.5 + p11 {
                (true, false)
            } else {
                (false, true)
            }
        };
        if pass1 {
            xx.push(tag(CHANNEL_XX, t1));
        }
        if pass2 {
            x.push(tag(CHANNEL_X, t2));
        }
    }
    let xx = apply_detector(&xx, &setup.det1, rng);
    let x = apply_detector(&x, &setup.det2, rng);
    Ok(merge(xx, x))
}

/// Detects XX on channel 0 and X on channel 1 without interferometers.
pub fn direct_detect(stream: &PairStream, det_xx: &DetectorModel, det_x: &DetectorModel, rng: &mut SimRng) -> Vec<TimeTag> {
    let tag = |channel: u8, t: f64| TimeTag { channel, time: t.round().max(0.0) as u64 };
    let xx: Vec<TimeTag> =
        stream.events.iter().filter(|e| e.photons.has_xx()).map(|e| tag(CHANNEL_XX, e.t_xx)).collect();
    let mut x: Vec<TimeTag> =
        stream.events.iter().filter(|e| e.photons.has_x()).map(|e| tag(CHANNEL_X, e.t_x)).collect();
    x.sort_unstable();
    merge(apply_detector(&xx, det_xx, rng), apply_detector(&x, det_x, rng))
}

/// Merges two time-sorted tag streams.
pub(crate) fn merge(a: Vec<TimeTag>, b: Vec<TimeTag>) -> Vec<TimeTag> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if (a[i].time, a[i].channel) <= (b[j].time, b[j].channel) {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emission::{PairEvent, Photons};
    use crate::rng::seeded;

    fn setup() -> FransonSetup {
        FransonSetup {
            mzi1: UnbalancedMZI::default(),
            mzi2: UnbalancedMZI { label: 2, ..Default::default() },
            det1: DetectorModel::ideal(),
            det2: DetectorModel::ideal(),
            basis: Basis::Horizontal,
            fss: 28e-6,
            pump_coherence_time: f64::INFINITY,
            lock_phase_sigma: 0.0,
        }
    }

    fn pairs(n: usize, contrast: f64) -> PairStream {
        let events = (0..n)
            .map(|i| {
                let t = 1e5 * i as f64;
                PairEvent { t_xx: t, t_x: t + 500.0, pair_phase: 0.0, dephasing_kick: 0.0, from_cascade: true, photons: Photons::Both }
            })
            .collect();
        PairStream { events, duration: 1e5 * n as f64, pair_contrast: contrast }
    }

    /// Counts (central, side) coincidences assuming well separated pairs.
    fn classes(tags: &[TimeTag]) -> (usize, usize) {
        let (mut central, mut side) = (0, 0);
        for w in tags.windows(2) {
            if w[0].channel != w[1].channel && w[1].time - w[0].time < 5000 {
                let (xx, x) = if w[0].channel == CHANNEL_XX { (w[0], w[1]) } else { (w[1], w[0]) };
                if x.time as i64 - xx.time as i64 == 500 {
                    central += 1;
                } else {
                    side += 1;
                }
            }
        }
        (central, side)
    }

    #[test]
    fn mismatched_delays_rejected() {
        let mut s = setup();
        s.mzi2.long_arm += 0.01;
        assert!(matches!(franson_route_and_detect(&pairs(1, 1.0), &s, &mut seeded(1, 0)), Err(Error::Config { .. })));
    }

    #[test]
    fn destructive_interference_removes_central_peak() {
        let mut s = setup();
        s.mzi1.phase = PI;
        let tags = franson_route_and_detect(&pairs(20_000, 1.0), &s, &mut seeded(2, 0)).unwrap();
        let (central, side) = classes(&tags);
        assert_eq!(central, 0);
        assert!(side > 2000);
        s.mzi1.phase = 0.0;
        let tags = franson_route_and_detect(&pairs(20_000, 1.0), &s, &mut seeded(2, 0)).unwrap();
        let (central, side) = classes(&tags);
        // p11 = 1/2 per central pair and 1/4 per side pair.
        assert!((central as f64 / side as f64 - 2.0).abs() < 0.15, "{central} {side}");
    }

    #[test]
    fn incoherent_pairs_are_phase_flat() {
        let mut s = setup();
        let mut counts = Vec::new();
        for phase in [0.0, PI] {
            s.mzi1.phase = phase;
            let tags = franson_route_and_detect(&pairs(40_000, 0.0), &s, &mut seeded(3, 0)).unwrap();
            counts.push(classes(&tags).0 as f64);
        }
        // Identical seeds and C = 0 give identical central counts.
        assert_eq!(counts[0], counts[1]);
        assert!((counts[0] / 40_000.0 - 0.125).abs() < 0.01);
    }

    #[test]
    fn lossless_routing_conserves_photons_per_port() {
        let s = setup();
        let tags = franson_route_and_detect(&pairs(50_000, 1.0), &s, &mut seeded(4, 0)).unwrap();
        let xx = tags.iter().filter(|t| t.channel == CHANNEL_XX).count() as f64;
        assert!((xx / 50_000.0 - 0.5).abs() < 0.01);
        assert!(tags.windows(2).all(|w| w[0].time <= w[1].time));
    }
}
