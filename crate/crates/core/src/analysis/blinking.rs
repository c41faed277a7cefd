use nalgebra::{DVector, Matrix3, Vector3};
use serde::Serialize;

use super::histogram::CoincidenceHistogram;
use super::lm::levenberg_marquardt;
use crate::error::{Error, Result};

/// Long-delay bunching offset `baseline + amplitude·e^{-|τ|/timescale}`
/// in normalized coincidences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlinkingFit {
    pub baseline: f64,
    pub amplitude: f64,
    /// ps
    pub timescale: f64,
    /// Covariance of (baseline, amplitude, timescale).
    pub covariance: [[f64; 3]; 3],
    pub chi2_reduced: f64,
}

impl BlinkingFit {
    /// The plain accidental level of one normalized coincidence, known exactly.
    pub fn accidental_level() -> Self {
        BlinkingFit { baseline: 1.0, amplitude: 0.0, timescale: 1.0, covariance: [[0.0; 3]; 3], chi2_reduced: 0.0 }
    }

    pub fn evaluate(&self, tau: f64) -> f64 {
        self.baseline + self.amplitude * (-tau.abs() / self.timescale).exp()
    }

    /// Gradient with respect to (baseline, amplitude, timescale).
    pub fn gradient(&self, tau: f64) -> Vector3<f64> {
        let e = (-tau.abs() / self.timescale).exp();
        Vector3::new(1.0, e, self.amplitude * e * tau.abs() / (self.timescale * self.timescale))
    }

    pub fn sigma_amplitude(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }

    pub fn sigma_timescale(&self) -> f64 {
        self.covariance[2][2].max(0.0).sqrt()
    }

    pub fn sigma_baseline(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }

    fn covariance_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.covariance[i][j])
    }
}

/// Fits the bunching offset on the bins lying entirely inside
/// `inner ≤ |τ| ≤ outer` (ps). Weights are Poisson errors carried through
/// the normalization, taken from the data and then from the first fit.
pub fn fit_blinking_offset(hist: &CoincidenceHistogram, fit_range: (f64, f64)) -> Result<BlinkingFit> {
    let Some(norm) = hist.norm() else {
        return Err(Error::InsufficientData("blinking fit needs a normalized histogram".into()));
    };
    let (inner, outer) = fit_range;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sig = Vec::new();
    let w = hist.bin_width as f64;
    for (k, tau) in hist.centers().enumerate() {
        let (near, far) = (tau.abs() - 0.5 * w, tau.abs() + 0.5 * w);
        if near >= inner && far <= outer {
            xs.push(tau);
            ys.push(hist.counts[k] as f64 / norm);
            sig.push((hist.counts[k].max(1) as f64).sqrt() / norm);
        }
    }
    if xs.len() < 6 {
        return Err(Error::InsufficientData(format!("{} bins in |τ| ∈ [{inner}, {outer}] ps", xs.len())));
    }

    let initial = initial_guess(&xs, &ys, inner, outer);
    let max_timescale = 1e3 * outer;
    let run = |sig: &[f64], start: DVector<f64>| {
        levenberg_marquardt(
            &xs,
            &ys,
            sig,
            start,
            |tau, p, g| {
                let e = (-tau.abs() / p[2]).exp();
                g[0] = 1.0;
                g[1] = e;
                g[2] = p[1] * e * tau.abs() / (p[2] * p[2]);
                p[0] + p[1] * e
            },
            |p| {
                p[1] = p[1].max(0.0);
                p[2] = p[2].clamp(1.0, max_timescale);
            },
        )
    };
    let first = run(&sig, DVector::from_vec(initial.to_vec()))?;
    // Refit with the Poisson errors of the fitted model instead of the data.
    let p = &first.params;
    let model_sig: Vec<f64> =
        xs.iter().map(|tau| ((p[0] + p[1] * (-tau.abs() / p[2]).exp()) * norm).max(1.0).sqrt() / norm).collect();
    let fit = run(&model_sig, first.params.clone())?;
    let c = &fit.covariance;
    Ok(BlinkingFit {
        baseline: fit.params[0],
        amplitude: fit.params[1],
        timescale: fit.params[2],
        covariance: [[c[(0, 0)], c[(0, 1)], c[(0, 2)]], [c[(1, 0)], c[(1, 1)], c[(1, 2)]], [c[(2, 0)], c[(2, 1)], c[(2, 2)]]],
        chi2_reduced: fit.chi2_reduced(),
    })
}

/// Baseline from the outer tenth, amplitude and timescale from a log-linear
/// fit of the excess.
fn initial_guess(xs: &[f64], ys: &[f64], inner: f64, outer: f64) -> [f64; 3] {
    let edge = outer - 0.1 * (outer - inner);
    let mean = |pred: &dyn Fn(f64) -> bool| {
        let v: Vec<f64> = xs.iter().zip(ys).filter(|(x, _)| pred(x.abs())).map(|(_, y)| *y).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let baseline = mean(&|a| a >= edge);
    let near = mean(&|a| a <= inner + 0.1 * (outer - inner));
    let far_excess = (near - baseline).max(0.0);
    let fallback = [baseline, far_excess, 0.25 * (outer - inner).max(1.0)];
    if !(far_excess > 0.0) {
        return fallback;
    }
    // Weighted regression of ln(y - baseline) on |τ| over points with a clear excess.
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let excess = y - baseline;
        if excess > 0.2 * far_excess {
            let (a, l) = (x.abs(), excess.ln());
            let w = excess;
            s += w;
            sx += w * a;
            sy += w * l;
            sxx += w * a * a;
            sxy += w * a * l;
        }
    }
    let det = s * sxx - sx * sx;
    if det <= 0.0 {
        return fallback;
    }
    let slope = (s * sxy - sx * sy) / det;
    if slope >= 0.0 {
        return fallback;
    }
    let intercept = (sy - slope * sx) / s;
    [baseline, intercept.exp(), -1.0 / slope]
}

/// Summed coincidences in a window with their uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSum {
    pub sum: f64,
    pub sigma: f64,
    pub bins: usize,
}

/// Sums the bins inside `[t_lo, t_hi]` ps, subtracting `offset` evaluated at
/// each bin center. The variance is the Poisson variance of the raw counts
/// plus the fit variance of the subtracted offset.
pub fn window_sum(hist: &CoincidenceHistogram, window: (f64, f64), offset: Option<&BlinkingFit>) -> Result<WindowSum> {
    let range = hist.window_bins(window.0, window.1)?;
    if range.is_empty() {
        return Err(Error::InsufficientData(format!("no whole bin inside [{}, {}] ps", window.0, window.1)));
    }
    let scale = match (hist.norm(), offset) {
        (Some(n), _) => 1.0 / n,
        (None, None) => 1.0,
        (None, Some(_)) => {
            return Err(Error::InsufficientData("offset subtraction needs a normalized histogram".into()));
        }
    };
    let raw: u64 = hist.counts[range.clone()].iter().sum();
    let mut sum = raw as f64 * scale;
    let mut variance = raw as f64 * scale * scale;
    if let Some(fit) = offset {
        let mut jac = Vector3::zeros();
        for k in range.clone() {
            let tau = hist.bin_center(k);
            sum -= fit.evaluate(tau);
            jac += fit.gradient(tau);
        }
        variance += (jac.transpose() * fit.covariance_matrix() * jac)[(0, 0)].max(0.0);
    }
    Ok(WindowSum { sum, sigma: variance.sqrt(), bins: range.len() })
}

#[cfg(test)]
mod tests {
    use super::super::normalize_histogram;
    use super::*;

    fn unit_hist(value: u64) -> CoincidenceHistogram {
        let mut h = CoincidenceHistogram::empty(8, (0, 1200), 1.0, (1_000_000, 125_000)).unwrap();
        h.counts.iter_mut().for_each(|c| *c = value);
        h
    }

    #[test]
    fn poisson_window() {
        let h = unit_hist(1);
        let s = window_sum(&h, (0.0, 1200.0), None).unwrap();
        assert_eq!(s.sum, 150.0);
        assert!((s.sigma - 150f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exact_offset_cancels() {
        let h = normalize_histogram(&unit_hist(4)).unwrap();
        let level = h.values()[0];
        let offset = BlinkingFit {
            baseline: level,
            amplitude: 0.0,
            timescale: 1.0,
            covariance: [[1e-4, 0.0, 0.0], [0.0; 3], [0.0; 3]],
            chi2_reduced: 1.0,
        };
        let s = window_sum(&h, (0.0, 1200.0), Some(&offset)).unwrap();
        let plain = window_sum(&h, (0.0, 1200.0), None).unwrap();
        assert!(s.sum.abs() < 1e-12 * plain.sum);
        assert!(s.sigma > plain.sigma);
    }

    #[test]
    fn out_of_range_window() {
        assert!(matches!(window_sum(&unit_hist(1), (-10.0, 100.0), None), Err(Error::WindowOutOfRange { .. })));
    }
}
