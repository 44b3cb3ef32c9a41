mod common;

use std::f64::consts::PI;
use std::io::Write;

use herald_sense::estimator::{
    derive_seed, differences, estimate_from_differences, estimate_in_sets, estimate_phase, ingest_samples,
    resampled_variance, sample_variance, sensitivity_vs_alpha, BootstrapConfig, CalibrationCurve, ScanSettings,
};
use herald_sense::metrology::sensitivity_of;
use herald_sense::noise::{lossy_moments, lossy_sensitivity};
use herald_sense::sampler::HeraldedSampler;
use herald_sense::{EfficiencyPair, EmpiricalEtaP, Error, FockCutoff, HeraldedStateSpec, ObservableCoefficients, SamplerConfig};
use num_complex::Complex64;

fn lossy() -> EfficiencyPair {
    EfficiencyPair::new(0.9139, 0.59).unwrap()
}

fn simulate(alpha: f64, phi: f64, eff: EfficiencyPair, n: usize, seed: u64) -> Vec<f64> {
    let spec = HeraldedStateSpec::real(alpha, phi).unwrap();
    differences(&HeraldedSampler::new(spec, eff, SamplerConfig::with_seed(seed)).unwrap().draw(n))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn ideal_estimate_near_true_phase() {
    let phi_true = PI + 0.05;
    let x = simulate(1.13, phi_true, EfficiencyPair::IDEAL, 10_000, 7);
    let curve = CalibrationCurve::around_pi(1.13, EfficiencyPair::IDEAL, 1201).unwrap();
    let r = estimate_from_differences(&x, &curve, BootstrapConfig { resamples: 200, seed: 1 }).unwrap();
    assert!((r.phi_hat - phi_true).abs() < 3.0 * (1.0f64 / (1e4 * 0.851)).sqrt());
    assert_eq!(r.mu, 10_000);
    assert!((r.sensitivity.unwrap() - 1.0 / (1e4 * r.var_phi)).abs() < 1e-12);
}

#[test]
fn asymptotically_unbiased() {
    let curve = CalibrationCurve::around_pi(1.13, lossy(), 1201).unwrap();
    for (k, offset) in [-0.1, -0.02, 0.02, 0.1].into_iter().enumerate() {
        let phi_true = PI + offset;
        let pool = simulate(1.13, phi_true, lossy(), 200 * 10_000, 100 + k as u64);
        let estimates: Vec<f64> = pool.chunks(10_000).map(|c| curve.invert(mean(c)).unwrap()).collect();
        let se = (sample_variance(&estimates) / estimates.len() as f64).sqrt();
        let bias = mean(&estimates) - phi_true;
        assert!(bias.abs() < 3.0 * se, "offset {offset}: bias {bias:e}, se {se:e}");
    }
}

/// The leading finite-mu correction to `mu var_phi` is about
/// `(1 + 3 alpha^2) / (mu S)`: 5% at `mu = 100` for `alpha = 3.4` without
/// losses, against 8% for the lossy `alpha = 1.13` setting.
#[test]
fn variance_follows_inverse_mu() {
    let curve = CalibrationCurve::around_pi(3.4, EfficiencyPair::IDEAL, 1201).unwrap();
    let pool = simulate(3.4, PI, EfficiencyPair::IDEAL, 1_000_000, 31);
    let boot = BootstrapConfig { resamples: 4000, seed: 4 };
    let products: Vec<f64> = [100, 1_000, 10_000]
        .iter()
        .map(|&mu| resampled_variance(&pool, mu, &curve, boot).unwrap().var_phi * mu as f64)
        .collect();
    let lo = products.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = products.iter().cloned().fold(0.0, f64::max);
    assert!(hi / lo < 1.15, "{products:?}");
}

#[test]
fn bootstrap_tracks_replication_spread() {
    let curve = CalibrationCurve::around_pi(1.13, lossy(), 1201).unwrap();
    let pool = simulate(1.13, PI + 0.05, lossy(), 100 * 1000, 55);
    let mut estimates = Vec::new();
    let mut boot_var = Vec::new();
    for (i, chunk) in pool.chunks(1000).enumerate() {
        let r = estimate_from_differences(chunk, &curve, BootstrapConfig { resamples: 200, seed: derive_seed(9, i as u64) }).unwrap();
        estimates.push(r.phi_hat);
        boot_var.push(r.var_phi);
    }
    let empirical_sd = sample_variance(&estimates).sqrt();
    let bootstrap_se = mean(&boot_var).sqrt();
    let ratio = bootstrap_se / empirical_sd;
    assert!((1.0 / 1.3..1.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn two_sensitivity_routes_agree() {
    let (alpha, eff) = (1.13, lossy());
    let moments = lossy_moments(Complex64::new(alpha, 0.0), PI, eff, FockCutoff::for_alpha(alpha).with_margin(4)).unwrap();
    let from_moments = sensitivity_of(&ObservableCoefficients::p_difference(), &moments).unwrap();
    assert!((from_moments - lossy_sensitivity(alpha, eff)).abs() < 1e-6);

    let curve = CalibrationCurve::around_pi(alpha, eff, 1201).unwrap();
    let pool = simulate(alpha, PI, eff, 200_000, 77);
    let r = resampled_variance(&pool, 1000, &curve, BootstrapConfig { resamples: 1000, seed: 3 }).unwrap();
    let s = r.sensitivity.unwrap();
    assert!((s - from_moments).abs() < 3.0 * r.sensitivity_se.unwrap(), "{s} vs {from_moments}");
}

#[test]
fn sets_of_five_thousand() {
    let spec = HeraldedStateSpec::real(1.13, PI + 0.05).unwrap();
    let records = HeraldedSampler::new(spec, lossy(), SamplerConfig::with_seed(2)).unwrap().draw(50_000);
    let curve = CalibrationCurve::around_pi(1.13, lossy(), 1201).unwrap();
    let sets = estimate_in_sets(&records, 5000, &curve, BootstrapConfig { resamples: 100, seed: 0 }).unwrap();
    assert_eq!(sets.sets.len(), 10);
    assert!(sets.sets.iter().all(|r| r.mu == 5000));
    let expected_sd = (1.0 / (5000.0 * lossy_sensitivity(1.13, lossy()))).sqrt();
    assert!(sets.phi_sd > 0.4 * expected_sd && sets.phi_sd < 1.8 * expected_sd);
    assert!((sets.phi_mean - (PI + 0.05)).abs() < 4.0 * expected_sd / 10f64.sqrt());
}

#[test]
fn sensitivity_scan_tracks_theory() {
    let settings = ScanSettings {
        pool_size: 20_000,
        bootstrap: BootstrapConfig { resamples: 300, seed: 5 },
        ..ScanSettings::default()
    };
    let rows = sensitivity_vs_alpha(&[1.13, 3.4], &EmpiricalEtaP::default(), 0.59, &settings).unwrap();
    for r in &rows {
        assert_eq!(r.status, "ok");
        let (s, se) = (r.s_sim.unwrap(), r.s_sim_se.unwrap());
        assert!((s - r.s_theory).abs() < 4.0 * se, "{r:?}");
    }
    let ideal = sensitivity_vs_alpha(
        &[2.0],
        &EmpiricalEtaP {
            eta_p_sp: 1.0,
            visibility_coeff: 0.0,
        },
        1.0,
        &settings,
    )
    .unwrap();
    assert!((ideal[0].s_theory - 8.0 / 3.0).abs() < 1e-12);
}

#[test]
fn scan_rows_fail_independently() {
    let settings = ScanSettings {
        pool_size: 2000,
        mu: 1,
        ..ScanSettings::default()
    };
    let rows = sensitivity_vs_alpha(&[1.13], &EmpiricalEtaP::default(), 0.59, &settings).unwrap();
    assert!(rows[0].s_sim.is_none());
    assert!(rows[0].status.contains("insufficient"));
}

fn write_file(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
    path
}

#[test]
fn ingest_reports_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_file(&dir, "ok.csv", "# herald-sense 0.1.0\np1,p2\n0.5,-0.25\n1e-3,2\n");
    assert_eq!(ingest_samples(&ok).unwrap().len(), 2);

    let bad_value = write_file(&dir, "bad.csv", "# herald-sense\np1,p2\n0.5,0.1\n0.3,abc\n");
    match ingest_samples(&bad_value) {
        Err(Error::Format { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
    let nan = write_file(&dir, "nan.csv", "p1,p2\n0.5,NaN\n");
    match ingest_samples(&nan) {
        Err(Error::Format { line, message, .. }) => {
            assert_eq!(line, 2);
            assert!(message.contains("non-finite"));
        }
        other => panic!("{other:?}"),
    }
    let short = write_file(&dir, "short.csv", "p1,p2\n0.5,0.1\n0.7\n");
    assert!(matches!(ingest_samples(&short), Err(Error::Format { line: 3, .. })));
    let header = write_file(&dir, "header.csv", "x,y\n0.5,0.1\n");
    assert!(matches!(ingest_samples(&header), Err(Error::Format { line: 1, .. })));
    assert!(matches!(ingest_samples(&dir.path().join("missing.csv")), Err(Error::Io { .. })));
}

#[test]
fn header_only_file_refuses_estimation() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(&dir, "empty.csv", "p1,p2\n");
    let records = ingest_samples(&path).unwrap();
    assert!(records.is_empty());
    let curve = CalibrationCurve::around_pi(1.13, lossy(), 101).unwrap();
    assert!(matches!(
        estimate_phase(&records, &curve, BootstrapConfig::default()),
        Err(Error::InsufficientSamples { got: 0, .. })
    ));
}

#[test]
fn estimates_are_reproducible() {
    let x = simulate(3.4, PI + 0.02, lossy(), 5000, 12);
    let curve = CalibrationCurve::around_pi(3.4, lossy(), 801).unwrap();
    let boot = BootstrapConfig { resamples: 300, seed: 8 };
    let a = estimate_from_differences(&x, &curve, boot).unwrap();
    let b = estimate_from_differences(&x, &curve, boot).unwrap();
    assert_eq!(a, b);
    let c = estimate_from_differences(&x, &curve, BootstrapConfig { seed: 9, ..boot }).unwrap();
    assert_eq!(a.phi_hat, c.phi_hat);
    assert_ne!(a.var_phi, c.var_phi);
}
