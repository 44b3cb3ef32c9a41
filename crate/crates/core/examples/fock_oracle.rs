//! Brute-force check of the closed-form quadrature moments.
//!
//! Builds the heralded state in a truncated Fock space and compares
//! `<q>`, `<q q>` and the cross moment with the analytic expressions.
//!
//!     cargo run --example fock_oracle -- 1.13 3.0

use std::f64::consts::FRAC_PI_2;

use herald_sense::fock::build_heralded_state;
use herald_sense::moments::{first_moment, ordered_second_moment};
use herald_sense::{FockCutoff, HeraldedStateSpec, Mode, Operator};
use num_complex::Complex64;

fn main() -> herald_sense::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let alpha = args.first().copied().unwrap_or(1.13);
    let phi = args.get(1).copied().unwrap_or(3.0);

    let cutoff = FockCutoff::for_alpha(alpha);
    let state = build_heralded_state(Complex64::new(alpha, 0.0), phi, cutoff)?;
    let spec = HeraldedStateSpec::real(alpha, phi)?;
    println!("alpha = {alpha}, phi = {phi}, n_max = {}", cutoff.n_max());

    let quads = [(Mode::One, 0.0, "x1"), (Mode::One, FRAC_PI_2, "p1"), (Mode::Two, 0.0, "x2"), (Mode::Two, FRAC_PI_2, "p2")];
    println!("{:<10} {:>22} {:>22}", "moment", "closed form", "Fock oracle");
    for &(mode, theta, name) in &quads {
        let oracle = state.expectation(&Operator::quadrature(mode, theta))?.re;
        println!("<{name}>{:<6} {:>22.15} {:>22.15}", "", first_moment(&spec, mode, theta), oracle);
    }
    for &(m1, t1, n1) in &quads {
        for &(m2, t2, n2) in &quads {
            let op = Operator::quadrature(m1, t1) * Operator::quadrature(m2, t2);
            let oracle = state.expectation(&op)?;
            let closed = ordered_second_moment(&spec, (m1, m2), (t1, t2));
            println!("<{n1} {n2}>{:<3} {:>22.15} {:>22.15}   diff {:.1e}", "", closed.re, oracle.re, (closed - oracle).norm());
        }
    }
    Ok(())
}
