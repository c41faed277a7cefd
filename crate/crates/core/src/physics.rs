//! Closed-form physics of the two-photon-driven three-level system.
//!
//! Energies are in eV, times in ps. The dressed states are expressed in the
//! ordered basis (|G>, |X_V>, |XX>) of ground state, vertically polarized
//! exciton and biexciton in the frame rotating at the two-photon resonance.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::constants::PLANCK_EV_PS;
use crate::error::{ensure, Error, Result};

/// Polarization basis selected in front of the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Horizontal,
    Vertical,
    Diagonal,
    Antidiagonal,
}

impl Basis {
    /// Whether the basis superposes the two fine-structure components, which
    /// makes the exciton phase evolution visible as beats.
    pub fn is_diagonal(self) -> bool {
        matches!(self, Basis::Diagonal | Basis::Antidiagonal)
    }

    /// Phase offset of the fine-structure beat in two-photon correlations.
    pub fn beat_offset(self) -> f64 {
        match self {
            Basis::Antidiagonal => FRAC_PI_2,
            _ => 0.0,
        }
    }
}

impl std::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h" | "horizontal" => Ok(Basis::Horizontal),
            "v" | "vertical" => Ok(Basis::Vertical),
            "d" | "diagonal" => Ok(Basis::Diagonal),
            "a" | "antidiagonal" => Ok(Basis::Antidiagonal),
            other => Err(Error::config("basis", format!("unknown basis `{other}`"))),
        }
    }
}

/// Static emitter parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumDotParams {
    /// Exciton photon energy (eV).
    pub e_x: f64,
    /// Biexciton photon energy (eV).
    pub e_xx: f64,
    /// Fine-structure splitting of the exciton (eV).
    pub fss: f64,
    /// Exciton lifetime (ps).
    pub t1_x: f64,
    /// Biexciton lifetime (ps).
    pub t1_xx: f64,
}

impl Default for QuantumDotParams {
    /// Lines at 927.9 nm and 930.1 nm, 28 µeV splitting, 711 ps / 440 ps.
    fn default() -> Self {
        const HC_EV_NM: f64 = 1239.841984;
        QuantumDotParams {
            e_x: HC_EV_NM / 927.9,
            e_xx: HC_EV_NM / 930.1,
            fss: 28e-6,
            t1_x: 711.0,
            t1_xx: 440.0,
        }
    }
}

impl QuantumDotParams {
    /// Biexciton binding energy `e_x - e_xx` (eV).
    pub fn binding_energy(&self) -> f64 {
        self.e_x - self.e_xx
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.e_x > self.e_xx, "e_x", || {
            format!("exciton line {} eV must lie above biexciton line {} eV", self.e_x, self.e_xx)
        })?;
        ensure(self.fss >= 0.0, "fss", || format!("must be >= 0, got {}", self.fss))?;
        ensure(self.t1_x > 0.0, "t1_x", || format!("must be > 0, got {}", self.t1_x))?;
        ensure(self.t1_xx > 0.0, "t1_xx", || format!("must be > 0, got {}", self.t1_xx))
    }
}

/// Continuous-wave two-photon drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveParams {
    /// Rabi energy ħΩ (eV).
    pub rabi_energy: f64,
    /// Coherence time of the pump laser (ps).
    pub pump_coherence_time: f64,
    /// Nominal excitation power (µW); carried as metadata only.
    #[serde(default)]
    pub power_label: f64,
}

impl Default for DriveParams {
    fn default() -> Self {
        // A km-scale coherence length is ~10 µs.
        DriveParams { rabi_energy: 10e-6, pump_coherence_time: 1e7, power_label: 4.6 }
    }
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.rabi_energy >= 0.0, "rabi_energy", || format!("must be >= 0, got {}", self.rabi_energy))?;
        ensure(self.pump_coherence_time > 0.0, "pump_coherence_time", || {
            format!("must be > 0, got {}", self.pump_coherence_time)
        })
    }
}

/// Dressed eigenvalues (eV). `e0` is identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DressedEnergies {
    pub e0: f64,
    pub e_minus: f64,
    pub e_plus: f64,
}

/// Dressed eigenvalues with their eigenvectors in the (|G>, |X_V>, |XX>) basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DressedSpectrum {
    pub e0: f64,
    pub e_minus: f64,
    pub e_plus: f64,
    pub v0: [f64; 3],
    pub v_plus: [f64; 3],
    pub v_minus: [f64; 3],
}

/// Relative dressed-line positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DressedLines {
    /// All differences `E_i - E_j`, i != j, ascending.
    pub offsets: Vec<f64>,
    /// `|E_plus - E_minus|`, the outermost splitting.
    pub max_splitting: f64,
}

/// Pure-dephasing rate together with the coherence time it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceParams {
    /// First-order coherence time T2 (ps).
    pub t2: f64,
    /// Pure-dephasing rate 1/T2* (1/ps).
    pub pure_dephasing_rate: f64,
}

impl CoherenceParams {
    pub fn from_lifetime(t1: f64, t2: f64) -> Result<Self> {
        Ok(CoherenceParams { t2, pure_dephasing_rate: pure_dephasing_rate(t1, t2)? })
    }

    /// Pure-dephasing time T2* (ps); infinite for a Fourier-limited line.
    pub fn pure_dephasing_time(&self) -> f64 {
        1.0 / self.pure_dephasing_rate
    }
}

/// Two-photon-resonance Hamiltonian in the (|G>, |X_V>, |XX>) basis.
///
/// Its spectrum is exactly {0, E_-, E_+} of [`dressed_eigenvalues`], so it is
/// the reference for which eigenvector belongs to which eigenvalue.
pub fn two_photon_hamiltonian(binding_energy: f64, rabi_energy: f64) -> [[f64; 3]; 3] {
    let a = 0.5 * rabi_energy;
    let d = -0.5 * binding_energy;
    [[0.0, a, 0.0], [a, d, a], [0.0, a, 0.0]]
}

fn check_dressing_inputs(binding_energy: f64, rabi_energy: f64) -> Result<()> {
    if !(binding_energy >= 0.0 && rabi_energy >= 0.0) {
        return Err(Error::domain(format!(
            "binding and Rabi energies must be non-negative, got {binding_energy} and {rabi_energy}"
        )));
    }
    if binding_energy == 0.0 && rabi_energy == 0.0 {
        return Err(Error::domain("binding and Rabi energies are both zero; the spectrum is fully degenerate"));
    }
    Ok(())
}

/// Eigenvalues of the driven three-level system.
///
/// `E_-` is evaluated as `2(ħΩ)²/(ΔE_B + √(ΔE_B² + 8(ħΩ)²))`, algebraically
/// equal to `-(ΔE_B - √(..))/4` but free of cancellation at weak drive.
pub fn dressed_eigenvalues(binding_energy: f64, rabi_energy: f64) -> Result<DressedEnergies> {
    check_dressing_inputs(binding_energy, rabi_energy)?;
    let root = (binding_energy * binding_energy + 8.0 * rabi_energy * rabi_energy).sqrt();
    let e_minus = 2.0 * rabi_energy * rabi_energy / (binding_energy + root);
    let e_plus = -0.25 * (binding_energy + root);
    Ok(DressedEnergies { e0: 0.0, e_minus, e_plus })
}

/// Dressed eigenvectors.
///
/// Each `v±` is proportional to `(1, 2E/ħΩ, 1)` with `E` its own eigenvalue,
/// which is what diagonalizing [`two_photon_hamiltonian`] gives. Printed
/// forms of this result sometimes attach `2E_-/ħΩ` to the `|+>` label; the
/// labels here follow the eigenvalue each vector actually belongs to.
pub fn dressed_eigenvectors(binding_energy: f64, rabi_energy: f64) -> Result<DressedSpectrum> {
    if !(rabi_energy > 0.0) {
        return Err(Error::domain(format!("dressed eigenvectors need a Rabi energy > 0, got {rabi_energy}")));
    }
    let energies = dressed_eigenvalues(binding_energy, rabi_energy)?;
    let vector = |e: f64| {
        let middle = 2.0 * e / rabi_energy;
        let norm = 1.0 / (2.0 + middle * middle).sqrt();
        [norm, middle * norm, norm]
    };
    Ok(DressedSpectrum {
        e0: energies.e0,
        e_minus: energies.e_minus,
        e_plus: energies.e_plus,
        v0: [-FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2],
        v_plus: vector(energies.e_plus),
        v_minus: vector(energies.e_minus),
    })
}

/// Pairwise offsets between the dressed levels, which shift the X and XX
/// emission lines into the dressed transitions.
pub fn dressed_line_positions(qd: &QuantumDotParams, drive: &DriveParams) -> Result<DressedLines> {
    qd.validate().map_err(|e| e.within("qd"))?;
    drive.validate().map_err(|e| e.within("drive"))?;
    let e = dressed_eigenvalues(qd.binding_energy(), drive.rabi_energy)?;
    let levels = [e.e0, e.e_minus, e.e_plus];
    let mut offsets = Vec::with_capacity(6);
    for (i, a) in levels.iter().enumerate() {
        for (j, b) in levels.iter().enumerate() {
            if i != j {
                offsets.push(a - b);
            }
        }
    }
    offsets.sort_by(f64::total_cmp);
    Ok(DressedLines { offsets, max_splitting: e.e_minus - e.e_plus })
}

/// Pure-dephasing rate `1/T2* = 1/T2 - 1/(2 T1)` (1/ps).
pub fn pure_dephasing_rate(t1: f64, t2: f64) -> Result<f64> {
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::domain(format!("lifetime and coherence time must be positive, got {t1} and {t2}")));
    }
    if t2 > 2.0 * t1 {
        return Err(Error::domain(format!("T2 = {t2} ps exceeds the Fourier limit 2·T1 = {} ps", 2.0 * t1)));
    }
    // Exactly zero at the Fourier limit.
    Ok(((2.0 * t1 - t2) / (2.0 * t1 * t2)).max(0.0))
}

/// Beat period `h/δ` (ps) of a fine-structure doublet split by `fss` eV.
pub fn fss_beat_period(fss: f64) -> Result<f64> {
    if !(fss > 0.0) {
        return Err(Error::domain(format!("fine-structure splitting must be > 0, got {fss}")));
    }
    Ok(PLANCK_EV_PS / fss)
}

/// `|g1(τ)|` of a line with coherence time `t2`.
///
/// In H/V the line is a single component; in D/A the equal-weight doublet
/// beats at `δ/h` under the exponential envelope.
pub fn g1_magnitude(tau: f64, t2: f64, fss: f64, basis: Basis) -> Result<f64> {
    if !(t2 > 0.0) {
        return Err(Error::domain(format!("coherence time must be > 0, got {t2}")));
    }
    if fss < 0.0 {
        return Err(Error::domain(format!("fine-structure splitting must be >= 0, got {fss}")));
    }
    let envelope = (-tau.abs() / t2).exp();
    if basis.is_diagonal() {
        Ok(envelope * (PI * fss * tau / PLANCK_EV_PS).cos().abs())
    } else {
        Ok(envelope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix3, Vector3};

    const MEV: f64 = 1e-3;

    fn residual(h: &[[f64; 3]; 3], v: &[f64; 3], e: f64) -> f64 {
        let h = Matrix3::from_fn(|i, j| h[i][j]);
        let v = Vector3::from_column_slice(v);
        (h * v - v * e).norm()
    }

    #[test]
    fn eigenvalues_without_drive_collapse() {
        let e = dressed_eigenvalues(3.0 * MEV, 0.0).unwrap();
        assert_eq!(e.e0, 0.0);
        assert_eq!(e.e_minus, 0.0);
        assert_abs_diff_eq!(e.e_plus, -1.5 * MEV, epsilon = 1e-15);
    }

    #[test]
    fn eigenvalues_symmetric_limit() {
        let e = dressed_eigenvalues(0.0, 1.0 * MEV).unwrap();
        assert_abs_diff_eq!(e.e_minus, FRAC_1_SQRT_2 * MEV, epsilon = 1e-15);
        assert_abs_diff_eq!(e.e_plus, -FRAC_1_SQRT_2 * MEV, epsilon = 1e-15);
    }

    #[test]
    fn eigenvalues_at_three_and_one_mev() {
        // Frozen from a numerical diagonalization of the two-photon Hamiltonian.
        let e = dressed_eigenvalues(3.0 * MEV, 1.0 * MEV).unwrap();
        assert_abs_diff_eq!(e.e_minus / MEV, 0.280776406404415, epsilon = 1e-12);
        assert_abs_diff_eq!(e.e_plus / MEV, -1.780776406404415, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(matches!(dressed_eigenvalues(0.0, 0.0), Err(Error::Domain(_))));
        assert!(dressed_eigenvalues(-1e-3, 1e-3).is_err());
        assert!(matches!(dressed_eigenvectors(3e-3, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn eigenvectors_symmetric_limit() {
        let s = dressed_eigenvectors(0.0, 1.0 * MEV).unwrap();
        let r2 = 2f64.sqrt();
        for (got, want) in s.v_plus.iter().zip([0.5, -r2 / 2.0, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        for (got, want) in s.v_minus.iter().zip([0.5, r2 / 2.0, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn eigenvectors_solve_the_hamiltonian() {
        let (b, w) = (3.0 * MEV, 1.0 * MEV);
        let s = dressed_eigenvectors(b, w).unwrap();
        let h = two_photon_hamiltonian(b, w);
        assert!(residual(&h, &s.v0, s.e0) < 1e-12);
        assert!(residual(&h, &s.v_plus, s.e_plus) < 1e-12);
        assert!(residual(&h, &s.v_minus, s.e_minus) < 1e-12);
        let dot: f64 = s.v_plus.iter().zip(&s.v_minus).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(dot, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn line_positions() {
        let qd = QuantumDotParams { e_x: 1.336, e_xx: 1.333, ..Default::default() };
        let at = |w: f64| {
            dressed_line_positions(&qd, &DriveParams { rabi_energy: w * MEV, ..Default::default() }).unwrap()
        };
        let lines = at(1.0);
        assert_eq!(lines.offsets.len(), 6);
        assert_abs_diff_eq!(lines.max_splitting / MEV, 17f64.sqrt() / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(lines.max_splitting / MEV, 2.06155, epsilon = 1e-5);
        assert!(at(2.0).max_splitting > lines.max_splitting);
        // The |-> level merges with |0> as the drive vanishes.
        let weak = at(1e-4);
        let smallest = weak.offsets.iter().map(|o| o.abs()).fold(f64::INFINITY, f64::min);
        assert!(smallest < 1e-10);
    }

    #[test]
    fn dephasing_rate_examples() {
        assert_eq!(pure_dephasing_rate(500.0, 1000.0).unwrap(), 0.0);
        let rate = pure_dephasing_rate(440.0, 508.0).unwrap();
        assert_abs_diff_eq!(rate, 8.3214e-4, epsilon = 1e-7);
        assert_abs_diff_eq!(1.0 / rate, 1201.72, epsilon = 0.01);
        assert!(matches!(pure_dephasing_rate(440.0, 900.0), Err(Error::Domain(_))));
    }

    #[test]
    fn beat_period() {
        assert_abs_diff_eq!(fss_beat_period(28e-6).unwrap(), 147.702, epsilon = 1e-3);
        assert_abs_diff_eq!(fss_beat_period(2.0 * PLANCK_EV_PS).unwrap(), 0.5, epsilon = 1e-15);
        let (p1, p2) = (fss_beat_period(56e-6).unwrap(), fss_beat_period(28e-6).unwrap());
        assert_abs_diff_eq!(p1, p2 / 2.0, epsilon = 1e-12);
        assert!(fss_beat_period(0.0).is_err());
    }

    #[test]
    fn g1_examples() {
        for basis in [Basis::Horizontal, Basis::Vertical, Basis::Diagonal, Basis::Antidiagonal] {
            assert_eq!(g1_magnitude(0.0, 508.0, 28e-6, basis).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(g1_magnitude(508.0, 508.0, 28e-6, Basis::Horizontal).unwrap(), (-1f64).exp());
        let zero = 0.5 * fss_beat_period(28e-6).unwrap();
        assert_abs_diff_eq!(zero, 73.851, epsilon = 1e-3);
        assert!(g1_magnitude(zero, 508.0, 28e-6, Basis::Antidiagonal).unwrap() < 1e-12);
    }

    #[test]
    fn basis_parsing() {
        assert_eq!("A".parse::<Basis>().unwrap(), Basis::Antidiagonal);
        assert_eq!("horizontal".parse::<Basis>().unwrap(), Basis::Horizontal);
        assert!("x".parse::<Basis>().is_err());
    }
}
