//! Calibration curve `<p1 - p2>(phi)` with preparation and detection losses.
//!
//! Compares the closed-form lossy mean and variance with the mixed,
//! attenuated density matrix computed in Fock space, then prints the
//! sensitivity of `p1 - p2` at `phi = pi` for a few efficiencies.
//!
//!     cargo run --release --example lossy_calibration

use std::f64::consts::PI;

use herald_sense::fock::apply_mixture_and_loss;
use herald_sense::noise::{lossy_mean_x, lossy_sensitivity, lossy_var_x, p_difference};
use herald_sense::{EfficiencyPair, EmpiricalEtaP, FockCutoff};
use num_complex::Complex64;

fn main() -> herald_sense::Result<()> {
    let alpha = 1.13;
    let eta_p = EmpiricalEtaP::default().eta_p(alpha);
    let eff = EfficiencyPair::new(eta_p, 0.59)?;
    let cutoff = FockCutoff::for_alpha(alpha);
    let x = p_difference();
    let x2 = &x * &x;

    println!("alpha = {alpha}, eta_p = {eta_p:.4}, eta_d = 0.59");
    println!("{:>8} {:>12} {:>12} {:>12} {:>12}", "phi", "mean", "mean(Fock)", "var", "var(Fock)");
    for k in -4..=4 {
        let phi = PI + 0.1 * k as f64;
        let dm = apply_mixture_and_loss(Complex64::new(alpha, 0.0), phi, eff, cutoff)?;
        let m = dm.expectation(&x)?.re;
        let v = dm.expectation(&x2)?.re - m * m;
        println!(
            "{phi:>8.4} {:>12.8} {:>12.8} {:>12.8} {:>12.8}",
            lossy_mean_x(alpha, phi, eff),
            m,
            lossy_var_x(alpha, phi, eff),
            v
        );
    }

    println!("\nsensitivity of p1 - p2 at phi = pi");
    for (ep, ed) in [(1.0, 1.0), (eta_p, 1.0), (1.0, 0.59), (eta_p, 0.59)] {
        let eff = EfficiencyPair::new(ep, ed)?;
        println!("  eta_p = {ep:.4}, eta_d = {ed:.2}: S = {:.4}", lossy_sensitivity(alpha, eff));
    }
    Ok(())
}
