mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use common::{lossy_deviation, max_moment_deviation, numerical_qfi, phi_grid, ORACLE_ALPHAS};
use herald_sense::fock::{build_heralded_state, partial_transpose_negativity};
use herald_sense::metrology::{npt, qfi};
use herald_sense::moments::{assemble, first_moment, first_moment_derivative};
use herald_sense::noise::{lossy_moments, lossy_var_x};
use herald_sense::{EfficiencyPair, FockCutoff, HeraldedStateSpec, Mode};
use num_complex::Complex64;

#[test]
fn closed_form_moments_match_fock_space() {
    for &a in &ORACLE_ALPHAS {
        for &phi in &phi_grid() {
            let dev = max_moment_deviation(Complex64::new(a, 0.0), phi);
            assert!(dev < 1e-8, "alpha {a}, phi {phi}: deviation {dev:e}");
        }
    }
}

#[test]
fn complex_seed_amplitudes() {
    for alpha in [Complex64::new(0.0, 0.8), Complex64::from_polar(1.2, 0.7), Complex64::from_polar(0.5, -2.1)] {
        for phi in [0.4, PI, 4.5] {
            let dev = max_moment_deviation(alpha, phi);
            assert!(dev < 1e-8, "alpha {alpha}, phi {phi}: deviation {dev:e}");
        }
    }
}

#[test]
fn qfi_closed_form_matches_state_derivative() {
    for &a in &ORACLE_ALPHAS {
        for &phi in &phi_grid() {
            let spec = HeraldedStateSpec::real(a, phi).unwrap();
            let numeric = numerical_qfi(Complex64::new(a, 0.0), phi, 1e-5);
            assert!((numeric - qfi(&spec)).abs() < 1e-5, "alpha {a}, phi {phi}: {numeric} vs {}", qfi(&spec));
        }
    }
    for a in [0.5, 1.13, 3.4, 5.4, 7.92] {
        let spec = HeraldedStateSpec::real(a, PI).unwrap();
        assert_relative_eq!(qfi(&spec), 2.0 * a * a + 1.0, max_relative = 1e-12);
    }
}

#[test]
fn qfi_bounds_every_linear_observable() {
    for &a in &ORACLE_ALPHAS {
        for &phi in &phi_grid() {
            let spec = HeraldedStateSpec::real(a, phi).unwrap();
            let m = assemble(&spec);
            let opt = herald_sense::metrology::optimize_observable(&m).unwrap();
            assert!(opt.s_opt <= qfi(&spec) + 1e-9);
        }
    }
}

#[test]
fn negativity_matches_partial_transpose() {
    let cutoff = FockCutoff::new(14).unwrap();
    for a in [0.0, 0.5, 1.0] {
        for phi in [0.0, PI / 2.0, PI] {
            let state = build_heralded_state(Complex64::new(a, 0.0), phi, cutoff).unwrap();
            let oracle = partial_transpose_negativity(&state.to_density_matrix()).unwrap();
            let spec = HeraldedStateSpec::real(a, phi).unwrap();
            assert!((oracle - npt(&spec)).abs() < 1e-6, "alpha {a}, phi {phi}: {oracle} vs {}", npt(&spec));
        }
    }
    assert_eq!(npt(&HeraldedStateSpec::real(3.0, PI).unwrap()), 1.0);
}

#[test]
fn lossy_closed_forms_match_channel() {
    for &a in &ORACLE_ALPHAS {
        for phi in [0.3, PI / 2.0, PI - 0.05, PI, 4.0] {
            let (dm, dv) = lossy_deviation(a, phi);
            assert!(dm < 1e-6 && dv < 1e-6, "alpha {a}, phi {phi}: mean {dm:e}, var {dv:e}");
        }
    }
}

#[test]
fn lossy_variance_at_pi_is_algebraic() {
    for (ep, ed) in [(1.0, 1.0), (0.9139, 0.59), (0.3, 0.8), (0.0, 0.5)] {
        let eff = EfficiencyPair::new(ep, ed).unwrap();
        for a in [0.0, 1.13, 7.92] {
            assert!((lossy_var_x(a, PI, eff) - (0.5 + ep * ed)).abs() < 1e-14);
        }
    }
}

#[test]
fn lossy_moment_set_reduces_to_ideal() {
    let spec = HeraldedStateSpec::real(1.13, 2.8).unwrap();
    let cutoff = FockCutoff::for_alpha(1.13);
    let lossy = lossy_moments(Complex64::new(1.13, 0.0), 2.8, EfficiencyPair::IDEAL, cutoff).unwrap();
    let ideal = assemble(&spec);
    for i in 0..4 {
        assert!((lossy.mean[i] - ideal.mean[i]).abs() < 1e-10);
        assert!((lossy.d_vec[i] - ideal.d_vec[i]).abs() < 1e-6);
        for j in 0..4 {
            assert!((lossy.gamma[i][j] - ideal.gamma[i][j]).abs() < 1e-10);
        }
    }
}

#[test]
fn analytic_phase_derivative_matches_difference_quotient() {
    let h = 1e-6;
    for &a in &ORACLE_ALPHAS {
        for &phi in &phi_grid() {
            for (mode, theta) in [(Mode::One, 0.0), (Mode::Two, 1.0), (Mode::One, PI / 2.0)] {
                let plus = first_moment(&HeraldedStateSpec::real(a, phi + h).unwrap(), mode, theta);
                let minus = first_moment(&HeraldedStateSpec::real(a, phi - h).unwrap(), mode, theta);
                let d = first_moment_derivative(&HeraldedStateSpec::real(a, phi).unwrap(), mode, theta);
                assert!(((plus - minus) / (2.0 * h) - d).abs() < 1e-7);
            }
        }
    }
}
