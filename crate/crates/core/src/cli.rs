//! Configuration and commands behind the `herald-sense` binary.
//!
//! A run is described by a JSON [`ConfigFile`] whose fields are all
//! optional; command-line flags override it and command-specific defaults
//! fill the rest. The fully resolved [`RunConfig`] is echoed in every output
//! so a run can be repeated from its own results.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorKind, Result};
use crate::estimator::{
    self, derive_seed, differences, estimate_from_differences, BootstrapConfig, CalibrationCurve, EstimationResult,
    MuSweepRow, ScanSettings, SensitivityRow,
};
use crate::metrology::{self, ObservableCoefficients};
use crate::moments::{assemble, HeraldedStateSpec};
use crate::noise::{lossy_mean_x, lossy_var_x, EfficiencyPair, EmpiricalEtaP};
use crate::sampler::{csv_banner, format_float, sample_stream_to_file, write_atomically, HeraldedSampler, SamplerConfig};

pub const SEED_ENV: &str = "HERALD_SENSE_SEED";

/// A phase in radians, written either as a number or as `pi`, `pi+0.05`,
/// `pi-0.4`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim().to_ascii_lowercase();
    let rest = t.strip_prefix("pi").or_else(|| t.strip_prefix('π'));
    let value = match rest {
        Some(r) => {
            let r = r.trim();
            if r.is_empty() {
                Some(PI)
            } else if let Some(off) = r.strip_prefix('+') {
                off.trim().parse::<f64>().ok().map(|v| PI + v)
            } else if let Some(off) = r.strip_prefix('-') {
                off.trim().parse::<f64>().ok().map(|v| PI - v)
            } else {
                None
            }
        }
        None => t.parse::<f64>().ok(),
    };
    match value {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(Error::config("phi", format!("cannot read `{text}` as an angle (use e.g. 3.1, pi, pi+0.05)"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Radians(f64),
    Symbolic(String),
}

impl Angle {
    pub fn radians(&self) -> Result<f64> {
        match self {
            Angle::Radians(v) if v.is_finite() => Ok(*v),
            Angle::Radians(_) => Err(Error::NonFinite("phi")),
            Angle::Symbolic(s) => parse_angle(s),
        }
    }
}

/// A single phase or an inclusive sweep `start, start + step, ..., stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    Sweep { start: Angle, stop: Angle, step: f64 },
    Single(Angle),
}

impl PhiSpec {
    /// Parses `pi+0.05` or `start:stop:step`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        match parts.as_slice() {
            [one] => Ok(PhiSpec::Single(Angle::Radians(parse_angle(one)?))),
            [start, stop, step] => Ok(PhiSpec::Sweep {
                start: Angle::Radians(parse_angle(start)?),
                stop: Angle::Radians(parse_angle(stop)?),
                step: step
                    .trim()
                    .parse()
                    .map_err(|_| Error::config("phi", format!("sweep step `{step}` is not a number")))?,
            }),
            _ => Err(Error::config("phi", "expected an angle or start:stop:step")),
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            PhiSpec::Single(a) => Ok(vec![a.radians()?]),
            PhiSpec::Sweep { start, stop, step } => {
                let (a, b) = (start.radians()?, stop.radians()?);
                if !(step.is_finite() && *step > 0.0) {
                    return Err(Error::config("phi.step", "sweep step must be positive"));
                }
                if !(b >= a) {
                    return Err(Error::config("phi", "sweep stop lies below its start"));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize + 1;
                if n > 1_000_000 {
                    return Err(Error::config("phi.step", "sweep has more than 10^6 points"));
                }
                Ok((0..n).map(|i| a + i as f64 * step).collect())
            }
        }
    }

    pub fn single(&self) -> Result<f64> {
        match self.values()?.as_slice() {
            [v] => Ok(*v),
            _ => Err(Error::config("phi", "this command takes a single phase, not a sweep")),
        }
    }
}

/// Run configuration as read from JSON; every field may be omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub alpha: Option<f64>,
    pub phi: Option<PhiSpec>,
    pub eta_p: Option<f64>,
    pub eta_p_model: Option<EmpiricalEtaP>,
    pub eta_d: Option<f64>,
    pub g_squared: Option<f64>,
    pub mu: Option<usize>,
    pub seed: Option<u64>,
    pub bootstrap: Option<usize>,
    pub samples_per_point: Option<usize>,
    pub set_size: Option<usize>,
    pub alphas: Option<Vec<f64>>,
    pub pool_size: Option<usize>,
    pub mu_sweep: Option<Vec<usize>>,
    pub calibration_points: Option<usize>,
    pub grid_points: Option<usize>,
    pub batch: Option<usize>,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those of `self`.
    pub fn overlay(self, other: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigFile { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            alpha, phi, eta_p, eta_p_model, eta_d, g_squared, mu, seed, bootstrap, samples_per_point, set_size,
            alphas, pool_size, mu_sweep, calibration_points, grid_points, batch, out, input
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Calibrate,
    Estimate,
    Sensitivity,
    Optimize,
    Sample,
}

impl Command {
    fn default_phi(self) -> PhiSpec {
        match self {
            Command::Calibrate => PhiSpec::Sweep {
                start: Angle::Symbolic("pi-0.4".into()),
                stop: Angle::Symbolic("pi+0.4".into()),
                step: 0.05,
            },
            Command::Estimate | Command::Sample => PhiSpec::Single(Angle::Symbolic("pi+0.05".into())),
            Command::Sensitivity | Command::Optimize => PhiSpec::Single(Angle::Symbolic("pi".into())),
        }
    }

    fn default_mu(self) -> usize {
        match self {
            Command::Sensitivity => 200,
            Command::Sample => 50_000,
            _ => 10_000,
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: f64,
    pub phi: PhiSpec,
    /// Fixed preparation efficiency; `None` selects `eta_p_model`.
    pub eta_p: Option<f64>,
    pub eta_p_model: EmpiricalEtaP,
    pub eta_d: f64,
    pub g_squared: f64,
    pub mu: usize,
    pub seed: u64,
    pub bootstrap: usize,
    pub samples_per_point: usize,
    pub set_size: usize,
    pub alphas: Vec<f64>,
    pub pool_size: usize,
    pub mu_sweep: Option<Vec<usize>>,
    pub calibration_points: usize,
    pub grid_points: usize,
    pub batch: usize,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

pub const DEFAULT_MU_SWEEP: [usize; 7] = [100, 200, 500, 1_000, 2_000, 5_000, 10_000];

fn check_range(field: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !value.is_finite() || value < lo || value > hi {
        return Err(Error::config(field, format!("{value} is outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_positive(field: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(Error::config(field, "must be positive"));
    }
    Ok(())
}

impl RunConfig {
    /// Applies command defaults to `file`. `env_seed` is used when the file
    /// and flags leave the seed unset.
    pub fn resolve(command: Command, file: ConfigFile, env_seed: Option<u64>) -> Result<Self> {
        let cfg = RunConfig {
            command,
            alpha: file.alpha.unwrap_or(1.13),
            phi: file.phi.unwrap_or_else(|| command.default_phi()),
            eta_p: file.eta_p,
            eta_p_model: file.eta_p_model.unwrap_or_default(),
            eta_d: file.eta_d.unwrap_or(0.59),
            g_squared: file.g_squared.unwrap_or(1e-6),
            mu: file.mu.unwrap_or_else(|| command.default_mu()),
            seed: file.seed.or(env_seed).unwrap_or(0),
            bootstrap: file.bootstrap.unwrap_or(500),
            samples_per_point: file.samples_per_point.unwrap_or(50_000),
            set_size: file.set_size.unwrap_or(5_000),
            alphas: file.alphas.unwrap_or_else(|| vec![1.13, 3.40, 5.40, 7.92]),
            pool_size: file.pool_size.unwrap_or(50_000),
            mu_sweep: file.mu_sweep,
            calibration_points: file.calibration_points.unwrap_or(1201),
            grid_points: file.grid_points.unwrap_or(4096),
            batch: file.batch.unwrap_or(8192),
            out: file.out,
            input: file.input,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::config("alpha", "must be finite"));
        }
        self.phi.values()?;
        if let Some(p) = self.eta_p {
            check_range("eta_p", p, 0.0, 1.0)?;
        }
        check_range("eta_p_model.eta_p_sp", self.eta_p_model.eta_p_sp, 0.0, 1.0)?;
        check_range("eta_p_model.visibility_coeff", self.eta_p_model.visibility_coeff, 0.0, f64::MAX)?;
        check_range("eta_d", self.eta_d, 0.0, 1.0)?;
        if !(self.g_squared > 0.0 && self.g_squared < 1.0) {
            return Err(Error::config("g_squared", format!("{} is outside (0, 1)", self.g_squared)));
        }
        if self.mu < 2 && self.command != Command::Sample {
            return Err(Error::config("mu", "need at least two measurements"));
        }
        if self.bootstrap < 2 {
            return Err(Error::config("bootstrap", "need at least two resamples"));
        }
        check_positive("set_size", self.set_size)?;
        check_positive("pool_size", self.pool_size)?;
        check_positive("batch", self.batch)?;
        if self.calibration_points < 2 {
            return Err(Error::config("calibration_points", "need at least two points"));
        }
        if self.grid_points < 16 {
            return Err(Error::config("grid_points", "need at least 16 points"));
        }
        if self.alphas.is_empty() {
            return Err(Error::config("alphas", "list is empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::config("alphas", format!("{a} is not a positive amplitude")));
        }
        if let Some(s) = &self.mu_sweep {
            if s.is_empty() || s.iter().any(|&m| m < 2) {
                return Err(Error::config("mu_sweep", "needs sample sizes of at least 2"));
            }
        }
        Ok(())
    }

    /// Efficiencies at amplitude `alpha`: the fixed `eta_p` if given, else
    /// the empirical model.
    pub fn efficiency_at(&self, alpha: f64) -> Result<EfficiencyPair> {
        let eta_p = self.eta_p.unwrap_or_else(|| self.eta_p_model.eta_p(alpha));
        EfficiencyPair::new(eta_p, self.eta_d)
    }

    pub fn efficiency(&self) -> Result<EfficiencyPair> {
        self.efficiency_at(self.alpha)
    }

    pub fn bootstrap_config(&self, tag: u64) -> BootstrapConfig {
        BootstrapConfig {
            resamples: self.bootstrap,
            seed: derive_seed(self.seed, tag),
        }
    }

    pub fn sampler_config(&self, tag: u64) -> SamplerConfig {
        SamplerConfig {
            seed: derive_seed(self.seed, tag),
            grid_points: self.grid_points,
            batch: self.batch,
            ..SamplerConfig::default()
        }
    }
}

/// Seed tags keep the random streams of different run stages apart.
mod tags {
    pub const ESTIMATE_DATA: u64 = 1;
    pub const ESTIMATE_BOOT: u64 = 2;
    pub const POOL: u64 = 3;
    pub const SWEEP_BOOT: u64 = 4;
    pub const SCAN_SAMPLER: u64 = 5;
    pub const SCAN_BOOT: u64 = 6;
    pub const CALIBRATE: u64 = 1 << 32;
}

fn config_comment(cfg: &RunConfig) -> Result<String> {
    Ok(format!("# config {}\n", serde_json::to_string(cfg)?))
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomically(path, |w| w.write_all(text.as_bytes())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn csv_document(cfg: &RunConfig, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::config("out", e.to_string());
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        writer.write_record(row).map_err(csv_err)?;
    }
    let body = writer.into_inner().map_err(|e| Error::config("out", e.to_string()))?;
    Ok(format!("{}{}{}", csv_banner(), config_comment(cfg)?, String::from_utf8_lossy(&body)))
}

fn json_document(value: serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn software() -> String {
    format!("herald-sense {}", crate::VERSION)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub phi: f64,
    pub mean_x_theory: f64,
    pub var_x_theory: f64,
    pub mean_x_mc: Option<f64>,
    pub se_mc: Option<f64>,
}

/// Theory and Monte Carlo calibration curve over the `phi` sweep.
///
/// Each point simulates `samples_per_point` records; `se_mc` is the
/// standard error of the mean taken from the spread of the means of
/// consecutive sets of `set_size` records.
pub fn calibrate(cfg: &RunConfig) -> Result<Vec<CalibrationRow>> {
    let eff = cfg.efficiency()?;
    let alpha = cfg.alpha;
    if alpha < 0.0 {
        return Err(Error::config("alpha", "calibration uses a real non-negative amplitude"));
    }
    cfg.phi
        .values()?
        .iter()
        .enumerate()
        .map(|(i, &phi)| {
            let mut row = CalibrationRow {
                phi,
                mean_x_theory: lossy_mean_x(alpha, phi, eff),
                var_x_theory: lossy_var_x(alpha, phi, eff),
                mean_x_mc: None,
                se_mc: None,
            };
            if cfg.samples_per_point >= 2 {
                let spec = HeraldedStateSpec::real(alpha, phi)?;
                let sampler = HeraldedSampler::new(spec, eff, cfg.sampler_config(tags::CALIBRATE + i as u64))?;
                let x = differences(&sampler.draw(cfg.samples_per_point));
                let n = x.len() as f64;
                row.mean_x_mc = Some(x.iter().sum::<f64>() / n);
                let set_means: Vec<f64> = x
                    .chunks_exact(cfg.set_size)
                    .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                    .collect();
                row.se_mc = Some(if set_means.len() >= 2 {
                    (estimator::sample_variance(&set_means) / set_means.len() as f64).sqrt()
                } else {
                    (estimator::sample_variance(&x) / n).sqrt()
                });
            }
            Ok(row)
        })
        .collect()
}

pub fn cmd_calibrate(cfg: &RunConfig) -> Result<String> {
    let rows: Vec<Vec<String>> = calibrate(cfg)?
        .iter()
        .map(|r| {
            vec![
                format_float(r.phi),
                format_float(r.mean_x_theory),
                format_float(r.var_x_theory),
                opt_float(r.mean_x_mc),
                opt_float(r.se_mc),
            ]
        })
        .collect();
    let doc = csv_document(cfg, &["phi", "mean_X_theory", "var_X_theory", "mean_X_mc", "se_mc"], &rows)?;
    emit(cfg.out.as_deref(), &doc)?;
    Ok(doc)
}

/// Result of the `estimate` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    #[serde(flatten)]
    pub result: EstimationResult,
    pub phi_true: Option<f64>,
    pub source: String,
    pub mu_sweep: Option<Vec<MuSweepRow>>,
}

fn input_records(cfg: &RunConfig) -> Result<(Vec<f64>, String)> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::config("input", "give --input PATH or --simulate"))?;
    let records = estimator::ingest_samples(path)?;
    Ok((differences(&records), path.display().to_string()))
}

/// Phase estimate from simulated or ingested records, plus the optional
/// variance-versus-`mu` table.
pub fn estimate(cfg: &RunConfig, simulate: bool) -> Result<EstimateReport> {
    if cfg.alpha <= 0.0 {
        return Err(Error::config("alpha", "estimation needs a positive seed amplitude"));
    }
    let eff = cfg.efficiency()?;
    let curve = CalibrationCurve::around_pi(cfg.alpha, eff, cfg.calibration_points)?;
    let phi_true = cfg.phi.single()?;
    let simulate_x = |n: usize, tag: u64| -> Result<Vec<f64>> {
        let spec = HeraldedStateSpec::real(cfg.alpha, phi_true)?;
        Ok(differences(&HeraldedSampler::new(spec, eff, cfg.sampler_config(tag))?.draw(n)))
    };
    let (x, source) = if simulate {
        (simulate_x(cfg.mu, tags::ESTIMATE_DATA)?, "simulated".to_string())
    } else {
        input_records(cfg)?
    };
    let result = estimate_from_differences(&x, &curve, cfg.bootstrap_config(tags::ESTIMATE_BOOT))?;
    let mu_sweep = match &cfg.mu_sweep {
        Some(mus) => {
            let pool = if simulate { simulate_x(cfg.pool_size, tags::POOL)? } else { x };
            Some(estimator::mu_sweep(&pool, mus, &curve, cfg.bootstrap_config(tags::SWEEP_BOOT))?)
        }
        None => None,
    };
    Ok(EstimateReport {
        result,
        phi_true: simulate.then_some(phi_true),
        source,
        mu_sweep,
    })
}

/// `<out>.json` -> `<out>.mu_sweep.csv`.
pub fn mu_sweep_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.mu_sweep.csv"))
}

pub fn cmd_estimate(cfg: &RunConfig, simulate: bool) -> Result<String> {
    let report = estimate(cfg, simulate)?;
    let doc = json_document(serde_json::json!({
        "phi_hat": report.result.phi_hat,
        "var_phi": report.result.var_phi,
        "mu": report.result.mu,
        "sensitivity": report.result.sensitivity,
        "bootstrap_se": report.result.bootstrap_se,
        "phi_true": report.phi_true,
        "source": report.source,
        "mu_sweep": report.mu_sweep,
        "config": cfg,
        "software": software(),
        "seed": cfg.seed,
    }))?;
    emit(cfg.out.as_deref(), &doc)?;
    if let (Some(rows), Some(out)) = (&report.mu_sweep, &cfg.out) {
        let rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![r.mu.to_string(), format_float(r.var_phi), format_float(r.var_phi_se), format_float(r.theory)])
            .collect();
        let sweep = csv_document(cfg, &["mu", "var_phi", "var_phi_se", "theory"], &rows)?;
        emit(Some(&mu_sweep_path(out)), &sweep)?;
    }
    Ok(doc)
}

pub fn sensitivity(cfg: &RunConfig) -> Result<Vec<SensitivityRow>> {
    let settings = ScanSettings {
        mu: cfg.mu,
        pool_size: cfg.pool_size,
        phi_true: cfg.phi.single()?,
        calibration_points: cfg.calibration_points,
        bootstrap: cfg.bootstrap_config(tags::SCAN_BOOT),
        sampler: cfg.sampler_config(tags::SCAN_SAMPLER),
    };
    let model = match cfg.eta_p {
        Some(p) => EmpiricalEtaP {
            eta_p_sp: p,
            visibility_coeff: 0.0,
        },
        None => cfg.eta_p_model,
    };
    estimator::sensitivity_vs_alpha(&cfg.alphas, &model, cfg.eta_d, &settings)
}

pub fn cmd_sensitivity(cfg: &RunConfig) -> Result<String> {
    let rows: Vec<Vec<String>> = sensitivity(cfg)?
        .iter()
        .map(|r| {
            vec![
                format_float(r.alpha),
                opt_float(r.s_sim),
                opt_float(r.s_sim_se),
                format_float(r.s_theory),
                format_float(r.eta_p_used),
                r.status.clone(),
            ]
        })
        .collect();
    let doc = csv_document(cfg, &["alpha", "S_sim", "S_sim_se", "S_theory", "eta_p_used", "status"], &rows)?;
    emit(cfg.out.as_deref(), &doc)?;
    Ok(doc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub alpha: f64,
    pub phi: f64,
    pub c_opt: [f64; 4],
    pub s_opt: f64,
    pub s_p_difference: f64,
    pub qfi: f64,
    pub npt: f64,
    pub heralding_rate: f64,
    pub gamma_condition: f64,
}

/// Optimal observable and figures of merit of the ideal heralded state.
pub fn optimize(cfg: &RunConfig) -> Result<OptimizeReport> {
    let spec = HeraldedStateSpec::real(cfg.alpha, cfg.phi.single()?)?;
    let moments = assemble(&spec);
    let opt = metrology::optimize_observable(&moments)?;
    Ok(OptimizeReport {
        alpha: cfg.alpha,
        phi: spec.phi(),
        c_opt: opt.c_opt.as_array(),
        s_opt: opt.s_opt,
        s_p_difference: metrology::sensitivity_of(&ObservableCoefficients::p_difference(), &moments)?,
        qfi: metrology::qfi(&spec),
        npt: metrology::npt(&spec),
        heralding_rate: metrology::heralding_rate(&spec, cfg.g_squared)?,
        gamma_condition: opt.condition,
    })
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<String> {
    let report = optimize(cfg)?;
    let mut value = serde_json::to_value(&report)?;
    value["config"] = serde_json::to_value(cfg)?;
    value["software"] = serde_json::Value::String(software());
    let doc = json_document(value)?;
    emit(cfg.out.as_deref(), &doc)?;
    Ok(doc)
}

/// Writes `mu` simulated records to `out`; returns the record count.
pub fn cmd_sample(cfg: &RunConfig) -> Result<usize> {
    let out = cfg
        .out
        .as_ref()
        .ok_or_else(|| Error::config("out", "sample needs --out PATH"))?;
    let spec = HeraldedStateSpec::real(cfg.alpha, cfg.phi.single()?)?;
    let sampler_cfg = SamplerConfig {
        seed: cfg.seed,
        ..cfg.sampler_config(0)
    };
    let sampler = HeraldedSampler::new(spec, cfg.efficiency()?, sampler_cfg)?;
    sample_stream_to_file(&sampler, cfg.mu, out)
}

#[derive(Debug, Parser)]
#[command(name = "herald-sense", version, about = "Remote phase sensing with a delocalized photon addition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Theory and Monte Carlo calibration curve <p1 - p2>(phi) as CSV.
    Calibrate(CommonFlags),
    /// Estimate phi from a sample file or a simulated run (JSON).
    Estimate {
        #[command(flatten)]
        common: CommonFlags,
        /// Simulate `mu` records at `phi` instead of reading --input.
        #[arg(long)]
        simulate: bool,
        /// Also tabulate var_phi against mu (comma-separated sizes; default list when empty).
        #[arg(long, num_args = 0..=1, default_missing_value = "")]
        mu_sweep: Option<String>,
        /// Sample file written by `sample`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Simulated and theoretical sensitivity against the seed amplitude (CSV).
    Sensitivity(CommonFlags),
    /// Optimal observable, QFI, entanglement and heralding rate (JSON).
    Optimize(CommonFlags),
    /// Write `mu` simulated quadrature records to --out.
    Sample(CommonFlags),
}

#[derive(Debug, Args)]
pub struct CommonFlags {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Phase: 3.19, pi, pi+0.05, or a sweep start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    #[arg(long)]
    pub eta_p: Option<f64>,
    #[arg(long)]
    pub eta_d: Option<f64>,
    #[arg(long)]
    pub g2: Option<f64>,
    #[arg(long)]
    pub mu: Option<usize>,
    /// Master seed; falls back to $HERALD_SENSE_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bootstrap resamples.
    #[arg(long)]
    pub bootstrap: Option<usize>,
}

impl CommonFlags {
    fn to_config(&self) -> Result<ConfigFile> {
        Ok(ConfigFile {
            alpha: self.alpha,
            phi: self.phi.as_deref().map(PhiSpec::parse).transpose()?,
            eta_p: self.eta_p,
            eta_d: self.eta_d,
            g_squared: self.g2,
            mu: self.mu,
            seed: self.seed,
            bootstrap: self.bootstrap,
            out: self.out.clone(),
            ..ConfigFile::default()
        })
    }

    fn resolve(&self, command: Command, extra: ConfigFile) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let layered = file.overlay(self.to_config()?).overlay(extra);
        let base = match (&layered.input, command) {
            (Some(path), Command::Estimate) => metadata_layer(path)?,
            _ => ConfigFile::default(),
        };
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::config(SEED_ENV, format!("`{s}` is not an unsigned integer")))?,
            ),
            Err(_) => None,
        };
        RunConfig::resolve(command, base.overlay(layered), env_seed)
    }
}

/// Physical parameters recorded next to a sample file, used where neither
/// the configuration nor the flags set them.
fn metadata_layer(input: &Path) -> Result<ConfigFile> {
    Ok(match estimator::ingest_metadata(input)? {
        Some(meta) if meta.alpha.1 == 0.0 => ConfigFile {
            alpha: Some(meta.alpha.0),
            eta_p: Some(meta.eta_p),
            eta_d: Some(meta.eta_d),
            phi: meta.phi_true.map(|p| PhiSpec::Single(Angle::Radians(p))),
            ..ConfigFile::default()
        },
        _ => ConfigFile::default(),
    })
}

fn parse_mu_list(text: &str) -> Result<Option<Vec<usize>>> {
    if text.trim().is_empty() {
        return Ok(None);
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::config("mu_sweep", format!("`{t}` is not a sample size")))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        CliCommand::Calibrate(flags) => cmd_calibrate(&flags.resolve(Command::Calibrate, ConfigFile::default())?).map(drop),
        CliCommand::Estimate {
            common,
            simulate,
            mu_sweep,
            input,
        } => {
            let mut extra = ConfigFile {
                input,
                ..ConfigFile::default()
            };
            if let Some(text) = mu_sweep {
                extra.mu_sweep = Some(parse_mu_list(&text)?.unwrap_or_else(|| DEFAULT_MU_SWEEP.to_vec()));
            }
            cmd_estimate(&common.resolve(Command::Estimate, extra)?, simulate).map(drop)
        }
        CliCommand::Sensitivity(flags) => {
            cmd_sensitivity(&flags.resolve(Command::Sensitivity, ConfigFile::default())?).map(drop)
        }
        CliCommand::Optimize(flags) => cmd_optimize(&flags.resolve(Command::Optimize, ConfigFile::default())?).map(drop),
        CliCommand::Sample(flags) => {
            let cfg = flags.resolve(Command::Sample, ConfigFile::default())?;
            let n = cmd_sample(&cfg)?;
            eprintln!("wrote {n} records to {}", cfg.out.as_deref().unwrap_or(Path::new("")).display());
            Ok(())
        }
    }
}

/// Process exit status for an error: 2 configuration, 3 input, 4 numerical.
pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Ingest => 3,
        ErrorKind::Numeric => 4,
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
