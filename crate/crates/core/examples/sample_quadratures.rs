//! Monte Carlo homodyne records and their sample file.
//!
//! Draws one million `(p1, p2)` records, compares the sample moments of
//! `p1 - p2` with the closed forms and writes a smaller file with its
//! `.meta.json` sidecar.
//!
//!     cargo run --release --example sample_quadratures -- /tmp/samples.csv

use std::f64::consts::PI;
use std::path::PathBuf;

use herald_sense::estimator::{differences, sample_variance};
use herald_sense::noise::{lossy_mean_x, lossy_var_x};
use herald_sense::sampler::{sample_stream_to_file, HeraldedSampler};
use herald_sense::{EfficiencyPair, HeraldedStateSpec, SamplerConfig};

fn main() -> herald_sense::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("herald-samples.csv"));
    let (alpha, phi) = (1.13, PI - 0.05);
    let spec = HeraldedStateSpec::real(alpha, phi)?;

    for eff in [EfficiencyPair::IDEAL, EfficiencyPair::new(0.9139, 0.59)?] {
        let sampler = HeraldedSampler::new(spec, eff, SamplerConfig::with_seed(2024))?;
        let x = differences(&sampler.draw(1_000_000));
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = sample_variance(&x);
        let (mt, vt) = (lossy_mean_x(alpha, phi, eff), lossy_var_x(alpha, phi, eff));
        println!(
            "eta = ({:.4}, {:.2}): mean {mean:.5} (theory {mt:.5}, z = {:+.2}), var {var:.5} (theory {vt:.5}, z = {:+.2})",
            eff.eta_p(),
            eff.eta_d(),
            (mean - mt) / (vt / n).sqrt(),
            (var - vt) / (vt * (2.0 / n).sqrt()),
        );
    }

    let sampler = HeraldedSampler::new(spec, EfficiencyPair::new(0.9139, 0.59)?, SamplerConfig::with_seed(7))?;
    let n = sample_stream_to_file(&sampler, 50_000, &out)?;
    println!("wrote {n} records to {}", out.display());
    Ok(())
}
