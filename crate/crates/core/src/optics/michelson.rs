use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{g1_magnitude, Basis};
use crate::rng::SimRng;

/// Coarse-delay scan of a Michelson interferometer with a piezo fine scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MichelsonScan {
    /// Coherence time of the line (ps).
    pub t2: f64,
    /// Fine-structure splitting (eV).
    pub fss: f64,
    pub basis: Basis,
    /// Coarse delays (ps).
    pub delays: Vec<f64>,
    /// Piezo positions per delay, spread evenly over one fringe.
    pub piezo_steps: usize,
    pub noise_sigma: f64,
    pub mean_intensity: f64,
}

/// Intensities of the fine scan at one coarse delay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeRecord {
    pub delay: f64,
    /// Optical phase `k·δx` of each piezo position (rad).
    pub phases: Vec<f64>,
    pub intensities: Vec<f64>,
}

/// Samples `I = I₀[1 + |g1(τ)|·cos(k·δx)] + noise` for every delay.
pub fn michelson_fringe_scan(scan: &MichelsonScan, rng: &mut SimRng) -> Result<Vec<FringeRecord>> {
    if scan.piezo_steps < 3 {
        return Err(Error::config("piezo_steps", "need at least 3 piezo positions per delay"));
    }
    scan.delays
        .iter()
        .map(|&delay| {
            let g1 = g1_magnitude(delay, scan.t2, scan.fss, scan.basis)?;
            let phases: Vec<f64> = (0..scan.piezo_steps).map(|i| TAU * i as f64 / scan.piezo_steps as f64).collect();
            let intensities = phases
                .iter()
                .map(|p| {
                    let noise = if scan.noise_sigma > 0.0 {
                        scan.noise_sigma * rng.sample::<f64, _>(StandardNormal)
                    } else {
                        0.0
                    };
                    scan.mean_intensity * (1.0 + g1 * p.cos()) + noise
                })
                .collect();
            Ok(FringeRecord { delay, phases, intensities })
        })
        .collect()
}

/// Fringe visibility from a linear least-squares fit of
/// `c0 + c1·cos φ + c2·sin φ`: `√(c1² + c2²)/c0`.
pub fn fringe_visibility(record: &FringeRecord) -> Result<f64> {
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (p, i) in record.phases.iter().zip(&record.intensities) {
        let row = Vector3::new(1.0, p.cos(), p.sin());
        normal += row * row.transpose();
        rhs += row * *i;
    }
    let c = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InsufficientData("fringe phases do not determine a sinusoid".into()))?;
    if !(c[0] > 0.0) {
        return Err(Error::InsufficientData(format!("non-positive mean fringe intensity {}", c[0])));
    }
    Ok(c[1].hypot(c[2]) / c[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;

    #[test]
    fn noiseless_visibilities() {
        let scan = MichelsonScan {
            t2: 508.0,
            fss: 28e-6,
            basis: Basis::Horizontal,
            delays: vec![0.0, 508.0],
            piezo_steps: 16,
            noise_sigma: 0.0,
            mean_intensity: 1.0,
        };
        let rec = michelson_fringe_scan(&scan, &mut seeded(1, 0)).unwrap();
        assert_abs_diff_eq!(fringe_visibility(&rec[0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fringe_visibility(&rec[1]).unwrap(), (-1f64).exp(), epsilon = 1e-12);
        let zero = MichelsonScan { basis: Basis::Antidiagonal, delays: vec![73.851], ..scan };
        let rec = michelson_fringe_scan(&zero, &mut seeded(1, 0)).unwrap();
        assert!(fringe_visibility(&rec[0]).unwrap() < 1e-4);
    }
}
