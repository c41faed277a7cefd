use std::f64::consts::TAU;

use proptest::prelude::*;

use franson_core::analysis::{chsh_check, fit_power_law, fit_visibility};
use franson_core::physics::{dressed_eigenvalues, dressed_eigenvectors, g1_magnitude, two_photon_hamiltonian, Basis};

fn apply(h: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| (0..3).map(|j| h[i][j] * v[j]).sum())
}

proptest! {
    #[test]
    fn eigenvectors_solve_the_hamiltonian(binding in 0.0f64..10e-3, rabi in 1e-6f64..5e-3) {
        let h = two_photon_hamiltonian(binding, rabi);
        let s = dressed_eigenvectors(binding, rabi).unwrap();
        let scale = s.e_plus.abs().max(s.e_minus.abs());
        for (e, v) in [(s.e0, s.v0), (s.e_plus, s.v_plus), (s.e_minus, s.v_minus)] {
            let hv = apply(&h, &v);
            for k in 0..3 {
                prop_assert!((hv[k] - e * v[k]).abs() <= 1e-12 * scale.max(1e-12));
            }
        }
    }

    #[test]
    fn eigenvalue_trace_matches(binding in 0.0f64..10e-3, rabi in 1e-6f64..5e-3) {
        let h = two_photon_hamiltonian(binding, rabi);
        let e = dressed_eigenvalues(binding, rabi).unwrap();
        let trace = h[0][0] + h[1][1] + h[2][2];
        prop_assert!((e.e0 + e.e_plus + e.e_minus - trace).abs() <= 1e-12 * trace.abs().max(rabi));
    }

    #[test]
    fn g1_is_bounded_and_even(tau in -5000.0f64..5000.0, t2 in 10.0f64..2000.0, fss in 0.0f64..100e-6) {
        for basis in [Basis::Horizontal, Basis::Vertical, Basis::Diagonal, Basis::Antidiagonal] {
            let g = g1_magnitude(tau, t2, fss, basis).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
            prop_assert!((g - g1_magnitude(-tau, t2, fss, basis).unwrap()).abs() < 1e-15);
            prop_assert!(g <= (-tau.abs() / t2).exp() + 1e-15);
        }
    }

    #[test]
    fn visibility_ignores_scale_and_phase_origin(
        v in 0.05f64..0.95,
        mean in 10.0f64..1e4,
        origin in 0.0f64..TAU,
        scale in 0.1f64..100.0,
    ) {
        let phases: Vec<f64> = (0..16).map(|k| TAU * k as f64 / 16.0).collect();
        let sums: Vec<f64> = phases.iter().map(|p| mean * (1.0 + v * (p - origin).cos())).collect();
        let sigmas: Vec<f64> = sums.iter().map(|s| s.sqrt()).collect();
        let fit = fit_visibility(&phases, &sums, &sigmas).unwrap();
        let scaled: Vec<f64> = sums.iter().map(|s| s * scale).collect();
        let scaled_sigmas: Vec<f64> = sigmas.iter().map(|s| s * scale).collect();
        let refit = fit_visibility(&phases, &scaled, &scaled_sigmas).unwrap();
        prop_assert!((fit.visibility - v).abs() < 1e-6);
        prop_assert!((refit.visibility - v).abs() < 1e-6);
    }

    #[test]
    fn power_law_slope_is_exact_without_noise(m in 0.5f64..2.5, a in 0.1f64..1e3) {
        let powers: Vec<f64> = (1..10).map(|k| k as f64).collect();
        let intensities: Vec<f64> = powers.iter().map(|p| a * p.powf(m)).collect();
        let sigmas: Vec<f64> = intensities.iter().map(|i| 0.01 * i).collect();
        let fit = fit_power_law(&powers, &intensities, &sigmas).unwrap();
        prop_assert!((fit.slope - m).abs() < 1e-8);
    }

    #[test]
    fn chsh_margin_sign(v in 0.0f64..1.0, sigma in 1e-4f64..0.1) {
        let c = chsh_check(v, sigma).unwrap();
        prop_assert_eq!(c.violates, v > std::f64::consts::FRAC_1_SQRT_2);
        prop_assert_eq!(c.n_sigma > 0.0, c.violates);
    }
}
