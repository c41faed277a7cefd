use serde::Serialize;

use super::histogram::CoincidenceHistogram;
use crate::error::{Error, Result};

/// Mean of a normalized histogram over bins lying inside `[lo, hi]` ps,
/// with its Poisson uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowMean {
    pub mean: f64,
    pub sigma: f64,
    pub bins: usize,
}

pub fn window_mean(hist: &CoincidenceHistogram, lo: f64, hi: f64) -> Result<WindowMean> {
    let Some(norm) = hist.norm() else {
        return Err(Error::InsufficientData("window mean needs a normalized histogram".into()));
    };
    let range = hist.window_bins(lo, hi)?;
    if range.is_empty() {
        return Err(Error::InsufficientData(format!("no whole bin inside [{lo}, {hi}] ps")));
    }
    let n = range.len() as f64;
    let raw: u64 = hist.counts[range.clone()].iter().sum();
    Ok(WindowMean {
        mean: raw as f64 / norm / n,
        sigma: (raw.max(1) as f64).sqrt() / norm / n,
        bins: range.len(),
    })
}

/// Zero-delay value of a normalized correlation: mean over `|τ| ≤ half_width`.
pub fn g2_zero(hist: &CoincidenceHistogram, half_width: f64) -> Result<f64> {
    Ok(window_mean(hist, -half_width, half_width)?.mean)
}
