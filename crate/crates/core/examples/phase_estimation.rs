//! Remote phase estimation from simulated homodyne data.
//!
//! Simulates 50 000 records at `phi = pi + 0.05`, splits them into ten sets
//! of 5000 and estimates the phase of each by inverting the calibration
//! curve. It then shows how the estimator variance falls with the number of
//! measurements `mu`, next to `1 / (mu S)`.
//!
//!     cargo run --release --example phase_estimation

use std::f64::consts::PI;

use herald_sense::estimator::{differences, estimate_in_sets, mu_sweep, BootstrapConfig, CalibrationCurve};
use herald_sense::noise::lossy_sensitivity;
use herald_sense::sampler::HeraldedSampler;
use herald_sense::{EfficiencyPair, HeraldedStateSpec, SamplerConfig};

fn main() -> herald_sense::Result<()> {
    let (alpha, phi_true) = (1.13, PI + 0.05);
    let eff = EfficiencyPair::new(0.9139, 0.59)?;
    let records = HeraldedSampler::new(HeraldedStateSpec::real(alpha, phi_true)?, eff, SamplerConfig::with_seed(7))?
        .draw(50_000);
    let curve = CalibrationCurve::around_pi(alpha, eff, 1201)?;
    let boot = BootstrapConfig { resamples: 500, seed: 1 };

    let sets = estimate_in_sets(&records, 5000, &curve, boot)?;
    for (i, r) in sets.sets.iter().enumerate() {
        println!("set {i}: phi_hat - pi = {:+.4} +- {:.4}", r.phi_hat - PI, r.bootstrap_se);
    }
    println!("mean over sets: pi {:+.4}, spread {:.4} (true offset +0.05)\n", sets.phi_mean - PI, sets.phi_sd);

    let s = lossy_sensitivity(alpha, eff);
    println!("S at pi = {s:.4}");
    println!("{:>7} {:>12} {:>12} {:>10}", "mu", "var_phi", "1/(mu S)", "ratio");
    for row in mu_sweep(&differences(&records), &[100, 200, 500, 1000, 2000, 5000, 10_000], &curve, boot)? {
        println!("{:>7} {:>12.4e} {:>12.4e} {:>10.3}", row.mu, row.var_phi, row.theory, row.var_phi / row.theory);
    }
    Ok(())
}
