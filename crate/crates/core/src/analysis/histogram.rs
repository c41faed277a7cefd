use serde::Serialize;

use crate::constants::PS_PER_S;
use crate::error::{Error, Result};
use crate::optics::TimeTag;

/// Binned start-stop coincidences `τ = t_b - t_a` over `[tau_min, tau_max)` ps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceHistogram {
    pub bin_width: u64,
    pub tau_min: i64,
    pub tau_max: i64,
    /// Raw counts; these are never rescaled in place.
    pub counts: Vec<u64>,
    /// Acquisition time (s).
    pub total_time: f64,
    pub singles_a: u64,
    pub singles_b: u64,
    norm: Option<f64>,
}

impl CoincidenceHistogram {
    pub fn empty(bin_width: u64, range: (i64, i64), total_time: f64, singles: (u64, u64)) -> Result<Self> {
        let (tau_min, tau_max) = range;
        if bin_width == 0 {
            return Err(Error::config("bin_width", "must be > 0"));
        }
        if tau_max <= tau_min || (tau_max - tau_min) % bin_width as i64 != 0 {
            return Err(Error::config(
                "range",
                format!("[{tau_min}, {tau_max}) is not a positive multiple of the bin width {bin_width}"),
            ));
        }
        let bins = ((tau_max - tau_min) / bin_width as i64) as usize;
        Ok(CoincidenceHistogram {
            bin_width,
            tau_min,
            tau_max,
            counts: vec![0; bins],
            total_time,
            singles_a: singles.0,
            singles_b: singles.1,
            norm: None,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn rate_a(&self) -> f64 {
        self.singles_a as f64 / self.total_time
    }

    pub fn rate_b(&self) -> f64 {
        self.singles_b as f64 / self.total_time
    }

    /// Lower edge of bin `k` (ps).
    pub fn bin_start(&self, k: usize) -> i64 {
        self.tau_min + (k as i64) * self.bin_width as i64
    }

    /// Center of bin `k` (ps).
    pub fn bin_center(&self, k: usize) -> f64 {
        self.bin_start(k) as f64 + 0.5 * self.bin_width as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.bin_center(k))
    }

    /// Expected accidental counts per bin, `R_a·R_b·T·W`.
    pub fn accidental_norm(&self) -> Result<f64> {
        let w = self.bin_width as f64 / PS_PER_S;
        let n = self.rate_a() * self.rate_b() * self.total_time * w;
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::ZeroNormalization(format!(
                "R_a = {}, R_b = {}, T = {} s, W = {} s",
                self.rate_a(),
                self.rate_b(),
                self.total_time,
                w
            )));
        }
        Ok(n)
    }

    /// The normalization divisor, once applied.
    pub fn norm(&self) -> Option<f64> {
        self.norm
    }

    pub fn is_normalized(&self) -> bool {
        self.norm.is_some()
    }

    /// Counts divided by the normalization when it has been applied.
    pub fn values(&self) -> Vec<f64> {
        let scale = self.norm.map_or(1.0, |n| 1.0 / n);
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }

    /// Statistical error of each value: `√max(raw, 1)` in histogram units.
    pub fn sigmas(&self) -> Vec<f64> {
        let scale = self.norm.map_or(1.0, |n| 1.0 / n);
        self.counts.iter().map(|&c| (c.max(1) as f64).sqrt() * scale).collect()
    }

    /// Adds the counts, singles and acquisition time of a histogram with the
    /// same binning. Both must be un-normalized.
    pub fn merge(&mut self, other: &CoincidenceHistogram) -> Result<()> {
        if self.norm.is_some() || other.norm.is_some() {
            return Err(Error::AlreadyNormalized);
        }
        if (self.bin_width, self.tau_min, self.tau_max) != (other.bin_width, other.tau_min, other.tau_max) {
            return Err(Error::config("range", "cannot merge histograms with different binning"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_time += other.total_time;
        self.singles_a += other.singles_a;
        self.singles_b += other.singles_b;
        Ok(())
    }

    /// Indices of the bins lying entirely inside `[lo, hi]` ps.
    pub fn window_bins(&self, lo: f64, hi: f64) -> Result<std::ops::Range<usize>> {
        if lo < self.tau_min as f64 || hi > self.tau_max as f64 || hi <= lo {
            return Err(Error::WindowOutOfRange { lo, hi, min: self.tau_min as f64, max: self.tau_max as f64 });
        }
        let w = self.bin_width as f64;
        let first = ((lo - self.tau_min as f64) / w).ceil() as usize;
        let last = ((hi - self.tau_min as f64) / w).floor() as usize;
        Ok(first..last.max(first))
    }
}

/// Divides every bin by `N = R_a·R_b·T·W`.
pub fn normalize_histogram(hist: &CoincidenceHistogram) -> Result<CoincidenceHistogram> {
    if hist.norm.is_some() {
        return Err(Error::AlreadyNormalized);
    }
    let n = hist.accidental_norm()?;
    Ok(CoincidenceHistogram { norm: Some(n), ..hist.clone() })
}

fn channel_times(tags: &[TimeTag], channel: u8) -> Vec<u64> {
    tags.iter().filter(|t| t.channel == channel).map(|t| t.time).collect()
}

/// Histogram of `t_b - t_a` over all pairs of a tag on `channel_a` and a tag
/// on `channel_b`, excluding a tag paired with itself.
///
/// `total_time` (s) defaults to the span of the stream.
pub fn cross_histogram(
    tags: &[TimeTag],
    channel_a: u8,
    channel_b: u8,
    bin_width: u64,
    range: (i64, i64),
    total_time: Option<f64>,
) -> Result<CoincidenceHistogram> {
    let a = channel_times(tags, channel_a);
    let b = if channel_a == channel_b { a.clone() } else { channel_times(tags, channel_b) };
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyStream(format!("no tags on channel {}", if a.is_empty() { channel_a } else { channel_b })));
    }
    let span = match (tags.first(), tags.last()) {
        (Some(f), Some(l)) => (l.time - f.time) as f64 / PS_PER_S,
        _ => 0.0,
    };
    let mut hist = CoincidenceHistogram::empty(
        bin_width,
        range,
        total_time.unwrap_or(span),
        (a.len() as u64, b.len() as u64),
    )?;
    accumulate(&mut hist.counts, &a, &b, channel_a == channel_b, bin_width, range);
    Ok(hist)
}

fn accumulate(counts: &mut [u64], a: &[u64], b: &[u64], auto: bool, bin_width: u64, (tau_min, tau_max): (i64, i64)) {
    let mut start = 0usize;
    for (i, &ta) in a.iter().enumerate() {
        let ta = ta as i64;
        while start < b.len() && (b[start] as i64) - ta < tau_min {
            start += 1;
        }
        let mut j = start;
        while j < b.len() {
            let tau = b[j] as i64 - ta;
            if tau >= tau_max {
                break;
            }
            if !(auto && i == j) {
                counts[((tau - tau_min) as u64 / bin_width) as usize] += 1;
            }
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair_lands_in_its_bin() {
        let tags = [TimeTag::new(0, 1000), TimeTag::new(1, 1100)];
        let h = cross_histogram(&tags, 0, 1, 8, (0, 1200), Some(1.0)).unwrap();
        assert_eq!(h.counts[12], 1);
        assert_eq!(h.counts.iter().sum::<u64>(), 1);
    }

    #[test]
    fn negative_delays_and_auto_correlation() {
        let tags = [TimeTag::new(1, 900), TimeTag::new(0, 1000), TimeTag::new(0, 1000)];
        let h = cross_histogram(&tags, 0, 1, 10, (-200, 200), Some(1.0)).unwrap();
        assert_eq!(h.counts[(200 - 100) / 10], 2);
        let auto = cross_histogram(&tags, 0, 0, 10, (-200, 200), Some(1.0)).unwrap();
        assert_eq!(auto.counts[20], 2);
        assert_eq!(auto.counts.iter().sum::<u64>(), 2);
    }

    #[test]
    fn empty_channel_is_an_error() {
        let tags = [TimeTag::new(0, 1)];
        assert!(matches!(cross_histogram(&tags, 0, 1, 8, (0, 80), None), Err(Error::EmptyStream(_))));
    }

    #[test]
    fn normalization_contract() {
        let mut h = CoincidenceHistogram::empty(8, (0, 80), 600.0, (6_000_000, 6_000_000)).unwrap();
        assert!((h.accidental_norm().unwrap() - 0.48).abs() < 1e-12);
        h.counts[0] = 48;
        let n = normalize_histogram(&h).unwrap();
        assert!((n.values()[0] - 100.0).abs() < 1e-9);
        assert!(matches!(normalize_histogram(&n), Err(Error::AlreadyNormalized)));
        let zero = CoincidenceHistogram::empty(8, (0, 80), 600.0, (0, 5)).unwrap();
        assert!(matches!(normalize_histogram(&zero), Err(Error::ZeroNormalization(_))));
    }

    #[test]
    fn window_selection() {
        let h = CoincidenceHistogram::empty(8, (-6000, 6000), 1.0, (1, 1)).unwrap();
        assert_eq!(h.window_bins(8.0, 1200.0).unwrap().len(), 149);
        assert!(matches!(h.window_bins(0.0, 7000.0), Err(Error::WindowOutOfRange { .. })));
    }
}
