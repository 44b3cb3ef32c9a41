//! Helpers shared by the integration tests and the acceptance report.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use herald_sense::fock::{build_heralded_state, heralded_vector};
use herald_sense::moments::{first_moment, ordered_second_moment};
use herald_sense::noise::{lossy_mean_x, lossy_var_x, p_difference};
use herald_sense::{EfficiencyPair, FockCutoff, HeraldedStateSpec, Mode, Operator, TwoModeDensityMatrix, TwoModeState};
use num_complex::Complex64;

/// Amplitudes small enough for a fast Fock comparison.
pub const ORACLE_ALPHAS: [f64; 4] = [0.0, 0.5, 1.13, 2.0];

pub fn phi_grid() -> Vec<f64> {
    vec![0.0, PI / 4.0, FRAC_PI_2, 3.0 * PI / 4.0, PI - 0.05, PI, 5.0 * PI / 4.0, 3.0 * FRAC_PI_2, 7.0 * PI / 4.0]
}

/// LO phase pairs: all combinations of x and p, plus two generic angles.
pub fn lo_angles() -> Vec<(Mode, f64)> {
    vec![
        (Mode::One, 0.0),
        (Mode::One, FRAC_PI_2),
        (Mode::Two, 0.0),
        (Mode::Two, FRAC_PI_2),
        (Mode::One, 0.37),
        (Mode::Two, -1.2),
    ]
}

/// Largest deviation between closed-form and Fock-space first and ordered
/// second moments for one state.
pub fn max_moment_deviation(alpha: Complex64, phi: f64) -> f64 {
    let cutoff = FockCutoff::for_alpha(alpha.norm()).with_margin(4);
    let state = build_heralded_state(alpha, phi, cutoff).unwrap();
    let spec = HeraldedStateSpec::new(alpha, phi).unwrap();
    let mut worst = 0.0f64;
    let quads = lo_angles();
    for &(mode, theta) in &quads {
        let q = Operator::quadrature(mode, theta);
        let oracle = state.expectation(&q).unwrap();
        worst = worst.max((oracle.re - first_moment(&spec, mode, theta)).abs()).max(oracle.im.abs());
        for &(mode2, theta2) in &quads {
            let op = Operator::quadrature(mode, theta) * Operator::quadrature(mode2, theta2);
            let oracle = state.expectation(&op).unwrap();
            let closed = ordered_second_moment(&spec, (mode, mode2), (theta, theta2));
            worst = worst.max((oracle - closed).norm());
        }
    }
    worst
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

/// `4 (<dpsi|dpsi> - |<psi|dpsi>|^2)` with the phase derivative of the
/// normalized state taken by central differences of step `h`.
pub fn numerical_qfi(alpha: Complex64, phi: f64, h: f64) -> f64 {
    let cutoff = FockCutoff::for_alpha(alpha.norm()).with_margin(4);
    let psi = normalized(heralded_vector(alpha, phi, cutoff).unwrap());
    let plus = normalized(heralded_vector(alpha, phi + h, cutoff).unwrap());
    let minus = normalized(heralded_vector(alpha, phi - h, cutoff).unwrap());
    let d: Vec<Complex64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let dd: f64 = d.iter().map(|a| a.norm_sqr()).sum();
    let overlap: Complex64 = psi.iter().zip(&d).map(|(a, b)| a.conj() * b).sum();
    4.0 * (dd - overlap.norm_sqr())
}

/// Efficiency grid used for the loss comparisons.
pub fn noise_grid() -> (Vec<f64>, Vec<f64>) {
    (vec![1.0, 0.9139, 0.5, 0.0], vec![1.0, 0.59, 0.2])
}

/// Largest deviations `(mean, variance)` of `p1 - p2` between the lossy
/// closed forms and the Fock channel, over the efficiency grid.
pub fn lossy_deviation(alpha: f64, phi: f64) -> (f64, f64) {
    let a = Complex64::new(alpha, 0.0);
    let cutoff = FockCutoff::for_alpha(alpha).with_margin(4);
    let ideal = build_heralded_state(a, phi, cutoff).unwrap().to_density_matrix();
    let seed = TwoModeState::coherent_pair(a, a, cutoff).unwrap().to_density_matrix();
    let x = p_difference();
    let x2 = &x * &x;
    let lose = |dm: &TwoModeDensityMatrix, eta: f64| -> TwoModeDensityMatrix {
        dm.apply_loss(Mode::One, eta).unwrap().apply_loss(Mode::Two, eta).unwrap()
    };
    let (eta_ps, eta_ds) = noise_grid();
    let (mut dm_max, mut dv_max) = (0.0f64, 0.0f64);
    for &eta_d in &eta_ds {
        // loss is linear, so mixing after the channel is equivalent
        let (li, ls) = (lose(&ideal, eta_d), lose(&seed, eta_d));
        for &eta_p in &eta_ps {
            let dm = li.mix(eta_p, &ls);
            let m = dm.expectation(&x).unwrap().re;
            let v = dm.expectation(&x2).unwrap().re - m * m;
            let eff = EfficiencyPair::new(eta_p, eta_d).unwrap();
            dm_max = dm_max.max((m - lossy_mean_x(alpha, phi, eff)).abs());
            dv_max = dv_max.max((v - lossy_var_x(alpha, phi, eff)).abs());
        }
    }
    (dm_max, dv_max)
}

/// Sample mean and variance with their standard errors; the variance error
/// uses the sample fourth central moment.
pub struct MomentEstimate {
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

pub fn moment_estimate(x: &[f64]) -> MomentEstimate {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    MomentEstimate {
        mean,
        var,
        se_mean: (var / n).sqrt(),
        se_var: ((m4 - var * var) / n).sqrt(),
    }
}

/// Deterministic pseudo-random coefficient vectors with entries in `[-1, 1)`.
pub fn random_coefficients(count: usize, seed: u64) -> Vec<[f64; 4]> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
        .collect()
}
