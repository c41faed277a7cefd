use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use nalgebra::{DVector, Matrix3, Vector3};
use serde::Serialize;

use super::blinking::{window_sum, BlinkingFit};
use super::histogram::CoincidenceHistogram;
use super::lm::levenberg_marquardt;
use crate::error::{Error, Result};

/// `A·(1 + V·cos(φ - φ₀))` fitted to phase-resolved coincidence sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityFit {
    pub mean_level: f64,
    pub modulation: f64,
    pub phase_origin: f64,
    pub visibility: f64,
    pub sigma_v: f64,
    pub chi2_reduced: f64,
}

/// Weighted sinusoid fit. Needs at least four distinct phases spanning more
/// than π.
pub fn fit_visibility(phases: &[f64], sums: &[f64], sigmas: &[f64]) -> Result<VisibilityFit> {
    if phases.len() != sums.len() || phases.len() != sigmas.len() {
        return Err(Error::InsufficientData("phases, sums and sigmas differ in length".into()));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::InsufficientData(format!("non-positive uncertainty {s}")));
    }
    let mut distinct: Vec<f64> = phases.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let span = distinct.last().unwrap_or(&0.0) - distinct.first().unwrap_or(&0.0);
    if distinct.len() < 4 || span <= PI {
        return Err(Error::DegeneratePhases(format!("{} distinct phases spanning {span:.3} rad", distinct.len())));
    }

    // The model is linear in (A, A·V·cos φ₀, A·V·sin φ₀); solve that first.
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for ((p, y), s) in phases.iter().zip(sums).zip(sigmas) {
        let row = Vector3::new(1.0, p.cos(), p.sin()) / *s;
        normal += row * row.transpose();
        rhs += row * (*y / *s);
    }
    let linear_cov = normal
        .try_inverse()
        .ok_or_else(|| Error::DegeneratePhases("phase positions do not determine a sinusoid".into()))?;
    let c = linear_cov * rhs;
    if !(c[0] > 0.0) {
        return Err(Error::NonConvergence(format!("mean level {} is not positive", c[0])));
    }
    let initial = DVector::from_vec(vec![c[0], c[1].hypot(c[2]) / c[0], c[2].atan2(c[1])]);

    let fit = levenberg_marquardt(
        phases,
        sums,
        sigmas,
        initial,
        |phi, p, g| {
            let (s, co) = (phi - p[2]).sin_cos();
            g[0] = 1.0 + p[1] * co;
            g[1] = p[0] * co;
            g[2] = p[0] * p[1] * s;
            p[0] * (1.0 + p[1] * co)
        },
        |_| {},
    )?;
    let (mut a, mut v, mut phi0) = (fit.params[0], fit.params[1], fit.params[2]);
    if v < 0.0 {
        v = -v;
        phi0 += PI;
    }
    phi0 = PI - (PI - phi0).rem_euclid(TAU);
    let mut sigma_v = fit.sigma(1);
    if !(sigma_v > 0.0 && sigma_v.is_finite()) || v < 1e-9 {
        // The phase is undetermined at V = 0; propagate from the linear form.
        let (var_c, var_s) = (linear_cov[(1, 1)], linear_cov[(2, 2)]);
        sigma_v = (0.5 * (var_c + var_s)).sqrt() / a;
    }
    if v > 1.0 {
        log::warn!("fitted visibility {v:.4} exceeds 1");
    }
    a = a.abs();
    Ok(VisibilityFit {
        mean_level: a,
        modulation: a * v,
        phase_origin: phi0,
        visibility: v,
        sigma_v,
        chi2_reduced: fit.chi2_reduced(),
    })
}

/// One point of a visibility-versus-window curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowVisibility {
    pub t_lo: f64,
    pub t_hi: f64,
    pub visibility: f64,
    pub sigma_v: f64,
}

/// Visibility for windows `[t_lo, t_hi]` for each `t_hi` in `t_his`.
///
/// `histograms[i]` is the normalized histogram recorded at `phases[i]`.
pub fn visibility_vs_window(
    histograms: &[CoincidenceHistogram],
    phases: &[f64],
    t_lo: f64,
    t_his: &[f64],
    offset: Option<&BlinkingFit>,
) -> Result<Vec<WindowVisibility>> {
    if histograms.len() != phases.len() {
        return Err(Error::InsufficientData("one histogram per phase is required".into()));
    }
    if let Some(h) = histograms.iter().find(|h| {
        (h.bin_width, h.tau_min, h.tau_max) != (histograms[0].bin_width, histograms[0].tau_min, histograms[0].tau_max)
    }) {
        return Err(Error::config("histograms", format!("inconsistent binning (bin width {} ps)", h.bin_width)));
    }
    t_his
        .iter()
        .map(|&t_hi| {
            let mut sums = Vec::with_capacity(phases.len());
            let mut sigmas = Vec::with_capacity(phases.len());
            for h in histograms {
                let w = window_sum(h, (t_lo, t_hi), offset)?;
                sums.push(w.sum);
                sigmas.push(w.sigma);
            }
            let fit = fit_visibility(phases, &sums, &sigmas)?;
            Ok(WindowVisibility { t_lo, t_hi, visibility: fit.visibility, sigma_v: fit.sigma_v })
        })
        .collect()
}

/// Outcome of comparing a visibility with the `1/√2` Bell threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshCheck {
    pub violates: bool,
    pub n_sigma: f64,
}

pub fn chsh_check(v: f64, sigma_v: f64) -> Result<ChshCheck> {
    if !(sigma_v > 0.0) {
        return Err(Error::domain(format!("visibility uncertainty must be > 0, got {sigma_v}")));
    }
    Ok(ChshCheck { violates: v > FRAC_1_SQRT_2, n_sigma: (v - FRAC_1_SQRT_2) / sigma_v })
}
