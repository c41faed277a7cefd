use nalgebra::DVector;
use serde::Serialize;

use super::lm::levenberg_marquardt;
use crate::error::{Error, Result};

/// `amplitude·e^{-t/timescale}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialFit {
    pub amplitude: f64,
    pub timescale: f64,
    pub sigma_timescale: f64,
    pub chi2_reduced: f64,
}

/// Weighted fit of an exponential decay over points where `exclude` is false.
pub fn fit_exponential(times: &[f64], values: &[f64], sigmas: &[f64], exclude: &[bool]) -> Result<ExponentialFit> {
    if times.len() != values.len() || times.len() != sigmas.len() || times.len() != exclude.len() {
        return Err(Error::InsufficientData("times, values, sigmas and mask differ in length".into()));
    }
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    let mut ss = Vec::new();
    for i in (0..times.len()).filter(|&i| !exclude[i]) {
        if !(values[i] > 0.0) {
            return Err(Error::domain(format!("value {} at t = {} is not positive", values[i], times[i])));
        }
        if !(sigmas[i] > 0.0) {
            return Err(Error::InsufficientData(format!("non-positive uncertainty at t = {}", times[i])));
        }
        ts.push(times[i]);
        ys.push(values[i]);
        ss.push(sigmas[i]);
    }
    if ts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} unmasked points, need 3", ts.len())));
    }

    // Log-linear start: ln y = ln a - t/τ with weights (y/σ)².
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((t, y), sg) in ts.iter().zip(&ys).zip(&ss) {
        let w = (y / sg).powi(2);
        let l = y.ln();
        s += w;
        sx += w * t;
        sy += w * l;
        sxx += w * t * t;
        sxy += w * t * l;
    }
    let det = s * sxx - sx * sx;
    let slope = (s * sxy - sx * sy) / det;
    let span = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ts.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(det > 0.0) || !(slope < 0.0) || -1.0 / slope > 1e6 * span.max(1e-300) {
        return Err(Error::NonConvergence(format!("data show no decay (log slope {slope:e}); timescale diverges")));
    }
    let intercept = (sy - slope * sx) / s;
    let fit = levenberg_marquardt(
        &ts,
        &ys,
        &ss,
        DVector::from_vec(vec![intercept.exp(), -1.0 / slope]),
        |t, p, g| {
            let e = (-t / p[1]).exp();
            g[0] = e;
            g[1] = p[0] * e * t / (p[1] * p[1]);
            p[0] * e
        },
        |p| p[1] = p[1].max(1e-9 * span),
    )?;
    let timescale = fit.params[1];
    if !(timescale.is_finite()) || timescale > 1e6 * span {
        return Err(Error::NonConvergence(format!("timescale {timescale:e} is not determined by the data")));
    }
    Ok(ExponentialFit {
        amplitude: fit.params[0],
        timescale,
        sigma_timescale: fit.sigma(1),
        chi2_reduced: fit.chi2_reduced(),
    })
}

/// `I = prefactor·P^slope`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub sigma_slope: f64,
    pub prefactor: f64,
}

/// Weighted straight-line fit in log-log space; `σ_ln I = σ/I`.
pub fn fit_power_law(powers: &[f64], intensities: &[f64], sigmas: &[f64]) -> Result<PowerLawFit> {
    if powers.len() != intensities.len() || powers.len() != sigmas.len() {
        return Err(Error::InsufficientData("powers, intensities and sigmas differ in length".into()));
    }
    if powers.len() < 2 {
        return Err(Error::InsufficientData("need at least two points".into()));
    }
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((p, i), sg) in powers.iter().zip(intensities).zip(sigmas) {
        if !(*p > 0.0 && *i > 0.0 && *sg > 0.0) {
            return Err(Error::domain(format!("power {p}, intensity {i} and sigma {sg} must all be positive")));
        }
        let w = (i / sg).powi(2);
        let (x, y) = (p.ln(), i.ln());
        s += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::InsufficientData("all powers are equal".into()));
    }
    let slope = (s * sxy - sx * sy) / det;
    Ok(PowerLawFit { slope, sigma_slope: (s / det).sqrt(), prefactor: ((sy - slope * sx) / s).exp() })
}
