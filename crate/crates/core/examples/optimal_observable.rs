//! Optimal linear homodyne observable and the quantities that bound it.
//!
//! For each seed amplitude the example prints the optimized coefficients
//! `c_opt` over `(x1, p1, x2, p2)`, the sensitivity they reach, the
//! sensitivity of plain `p1 - p2`, the quantum Fisher information and the
//! entanglement measure of the heralded state.
//!
//!     cargo run --example optimal_observable

use std::f64::consts::PI;

use herald_sense::metrology::{heralding_rate, npt, optimize_observable, qfi, sensitivity_of};
use herald_sense::moments::assemble;
use herald_sense::{HeraldedStateSpec, ObservableCoefficients};

fn main() -> herald_sense::Result<()> {
    let phi = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(PI);
    println!("phi = {phi:.4}");
    println!("{:>6} {:>34} {:>9} {:>9} {:>9} {:>7} {:>9}", "alpha", "c_opt", "s_opt", "S(p1-p2)", "QFI", "NPT", "rate/g2");
    for alpha in [0.0, 0.5, 1.13, 3.40, 5.40, 7.92] {
        let spec = HeraldedStateSpec::real(alpha, phi)?;
        let moments = assemble(&spec);
        let opt = optimize_observable(&moments)?;
        let c = opt.c_opt.as_array();
        let s_diff = sensitivity_of(&ObservableCoefficients::p_difference(), &moments).unwrap_or(0.0);
        println!(
            "{alpha:>6.2} [{:>6.3} {:>6.3} {:>6.3} {:>6.3}] {:>9.4} {:>9.4} {:>9.4} {:>7.4} {:>9.4}",
            c[0],
            c[1],
            c[2],
            c[3],
            opt.s_opt,
            s_diff,
            qfi(&spec),
            npt(&spec),
            heralding_rate(&spec, 1e-6)? / 1e-6,
        );
    }
    Ok(())
}
