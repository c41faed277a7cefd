//! Two-state blinking telegraph.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::rng::SimRng;

/// A maximal run of constant emitter state, `[start, end)` in ps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlinkInterval {
    pub start: f64,
    pub end: f64,
    pub on: bool,
}

impl BlinkInterval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

/// Alternating on/off intervals tiling `[0, duration)`, starting "on".
///
/// On-times are exponential with mean `1/blink_off_rate`, off-times with mean
/// `1/blink_on_rate`. A zero `blink_off_rate` never leaves the on state; a
/// zero `blink_on_rate` never returns from the first off interval.
pub struct Telegraph<'a> {
    rng: &'a mut SimRng,
    blink_on_rate: f64,
    blink_off_rate: f64,
    duration: f64,
    now: f64,
    on: bool,
}

impl<'a> Telegraph<'a> {
    pub fn new(rng: &'a mut SimRng, blink_on_rate: f64, blink_off_rate: f64, duration: f64) -> Self {
        Telegraph { rng, blink_on_rate, blink_off_rate, duration, now: 0.0, on: true }
    }
}

impl Iterator for Telegraph<'_> {
    type Item = BlinkInterval;

    fn next(&mut self) -> Option<BlinkInterval> {
        if self.now >= self.duration {
            return None;
        }
        let rate = if self.on { self.blink_off_rate } else { self.blink_on_rate };
        let dwell = if rate > 0.0 { self.rng.sample::<f64, _>(Exp1) / rate } else { f64::INFINITY };
        let interval = BlinkInterval { start: self.now, end: (self.now + dwell).min(self.duration), on: self.on };
        self.now = interval.end;
        self.on = !self.on;
        Some(interval)
    }
}

/// Collects the full telegraph for `duration` from a generator seeded by `seed`.
pub fn blink_telegraph(blink_on_rate: f64, blink_off_rate: f64, duration: f64, seed: u64) -> Vec<BlinkInterval> {
    let mut rng = crate::rng::seeded(seed, crate::rng::stream::TELEGRAPH);
    Telegraph::new(&mut rng, blink_on_rate, blink_off_rate, duration).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_blinking_is_one_interval() {
        let iv = blink_telegraph(1e-3, 0.0, 1e6, 1);
        assert_eq!(iv, vec![BlinkInterval { start: 0.0, end: 1e6, on: true }]);
    }

    #[test]
    fn intervals_tile_and_alternate() {
        let iv = blink_telegraph(1e-2, 2e-2, 1e5, 9);
        assert_eq!(iv[0].start, 0.0);
        assert!(iv[0].on);
        for w in iv.windows(2) {
            assert_eq!(w[0].end, w[1].start);
            assert_ne!(w[0].on, w[1].on);
        }
        assert_eq!(iv.last().unwrap().end, 1e5);
    }

    #[test]
    fn on_fraction_matches_alternating_renewal() {
        let (on_rate, off_rate) = (1.0 / 300.0, 1.0 / 100.0);
        let duration = 2e4 * (100.0 + 300.0);
        let iv = blink_telegraph(on_rate, off_rate, duration, 5);
        let on: f64 = iv.iter().filter(|i| i.on).map(BlinkInterval::len).sum();
        let expected = 100.0 / 400.0;
        assert!((on / duration - expected).abs() / expected < 0.01, "{}", on / duration);
    }
}
