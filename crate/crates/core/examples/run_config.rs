//! Driving the command pipeline from a JSON run configuration.
//!
//! Resolves a configuration the way the `herald-sense` binary does and runs
//! `optimize` and a short `calibrate` sweep, printing their documents.
//!
//!     cargo run --release --example run_config

use herald_sense::cli::{cmd_calibrate, cmd_optimize, Command, ConfigFile, RunConfig};

fn main() -> herald_sense::Result<()> {
    let file: ConfigFile = serde_json::from_str(
        r#"{
            "alpha": 1.13,
            "phi": {"start": "pi-0.2", "stop": "pi+0.2", "step": 0.1},
            "eta_d": 0.59,
            "samples_per_point": 20000,
            "seed": 42
        }"#,
    )?;
    let calibrate = RunConfig::resolve(Command::Calibrate, file.clone(), None)?;
    cmd_calibrate(&calibrate)?;

    let optimize = ConfigFile {
        phi: Some(herald_sense::cli::PhiSpec::parse("pi")?),
        ..file
    };
    cmd_optimize(&RunConfig::resolve(Command::Optimize, optimize, None)?)?;
    Ok(())
}
