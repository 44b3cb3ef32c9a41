//! Phase estimation by inverting the calibration curve `<p1 - p2>(phi)`.
//!
//! The curve is the lossy closed form [`lossy_mean_x`], tabulated on a
//! branch around `pi` where it increases strictly. A sample mean is mapped
//! back to a phase by monotone cubic interpolation, refined by a bracketed
//! Newton iteration on the closed form. Estimator variances come from the
//! nonparametric bootstrap; every resample owns a ChaCha20 stream derived
//! from the master seed, so results do not depend on the thread count.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::interp::MonotoneCubic;
use crate::moments::HeraldedStateSpec;
use crate::noise::{lossy_mean_x, lossy_mean_x_slope, lossy_sensitivity, EfficiencyPair, EmpiricalEtaP};
use crate::sampler::{metadata_path, HeraldedSampler, QuadratureRecord, SampleMetadata, SamplerConfig};

const INVERSION_TOL: f64 = 1e-10;
const BRANCH_MARGIN: f64 = 0.98;

/// Smallest sample size for which an estimate is attempted.
pub const MIN_SAMPLES: usize = 2;

/// Smallest `mu` for which `S = 1 / (mu var_phi)` is an asymptotic statement.
pub const ASYMPTOTIC_MU: usize = 100;

/// Half-width of the interval around `pi` on which `<p1 - p2>` is strictly
/// increasing, `arccos(alpha^2 / (1 + alpha^2))`.
///
/// The slope of the curve is proportional to
/// `cos(phi) (1 + alpha^2) + alpha^2`; efficiencies only rescale it.
pub fn monotonic_halfwidth(alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    (a2 / (1.0 + a2)).acos()
}

#[derive(Clone, Debug)]
pub struct CalibrationCurve {
    alpha: f64,
    eff: EfficiencyPair,
    phi_grid: Vec<f64>,
    mean_x: Vec<f64>,
    inverse: MonotoneCubic,
}

/// Tabulates `<p1 - p2>` on `n_points` equally spaced phases in `phi_range`.
pub fn build_calibration(
    alpha: f64,
    eff: EfficiencyPair,
    phi_range: (f64, f64),
    n_points: usize,
) -> Result<CalibrationCurve> {
    ensure_finite(alpha, "alpha")?;
    let (lo, hi) = (ensure_finite(phi_range.0, "phi_range")?, ensure_finite(phi_range.1, "phi_range")?);
    if alpha < 0.0 {
        return Err(Error::config("alpha", "calibration needs a real non-negative seed amplitude"));
    }
    if n_points < 2 {
        return Err(Error::config("n_points", "need at least two calibration points"));
    }
    if !(lo < hi) {
        return Err(Error::config("phi_range", "lower bound must be below the upper bound"));
    }
    if lo <= FRAC_PI_2 || hi >= 3.0 * FRAC_PI_2 {
        return Err(Error::OutsideBranch { lo, hi });
    }
    let phi_grid: Vec<f64> = (0..n_points)
        .map(|i| lo + (hi - lo) * i as f64 / (n_points - 1) as f64)
        .collect();
    let mean_x: Vec<f64> = phi_grid.iter().map(|&p| lossy_mean_x(alpha, p, eff)).collect();
    let endpoints_rise = lossy_mean_x_slope(alpha, lo, eff) > 0.0 && lossy_mean_x_slope(alpha, hi, eff) > 0.0;
    if !endpoints_rise || mean_x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotonicRange { lo, hi });
    }
    let inverse = MonotoneCubic::new(mean_x.clone(), phi_grid.clone())?;
    Ok(CalibrationCurve {
        alpha,
        eff,
        phi_grid,
        mean_x,
        inverse,
    })
}

impl CalibrationCurve {
    /// Curve on `pi +- 0.98 * monotonic_halfwidth(alpha)`.
    pub fn around_pi(alpha: f64, eff: EfficiencyPair, n_points: usize) -> Result<Self> {
        let delta = BRANCH_MARGIN * monotonic_halfwidth(alpha);
        build_calibration(alpha, eff, (PI - delta, PI + delta), n_points)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn efficiency(&self) -> EfficiencyPair {
        self.eff
    }

    pub fn phi_grid(&self) -> &[f64] {
        &self.phi_grid
    }

    pub fn mean_x(&self) -> &[f64] {
        &self.mean_x
    }

    pub fn phi_range(&self) -> (f64, f64) {
        (self.phi_grid[0], self.phi_grid[self.phi_grid.len() - 1])
    }

    pub fn mean_range(&self) -> (f64, f64) {
        (self.mean_x[0], self.mean_x[self.mean_x.len() - 1])
    }

    pub fn value(&self, phi: f64) -> f64 {
        lossy_mean_x(self.alpha, phi, self.eff)
    }

    pub fn slope_at(&self, phi: f64) -> f64 {
        lossy_mean_x_slope(self.alpha, phi, self.eff)
    }

    /// Phase whose calibrated mean equals `mean`.
    pub fn invert(&self, mean: f64) -> Result<f64> {
        let (lo, hi) = self.mean_range();
        if !(mean >= lo && mean <= hi) {
            return Err(Error::OutOfRange { mean, lo, hi });
        }
        let k = self.mean_x.partition_point(|&m| m <= mean).clamp(1, self.mean_x.len() - 1);
        let (mut a, mut b) = (self.phi_grid[k - 1], self.phi_grid[k]);
        let mut phi = self.inverse.eval(mean).clamp(a, b);
        for _ in 0..100 {
            let f = self.value(phi) - mean;
            if f.abs() <= 0.01 * INVERSION_TOL {
                break;
            }
            if f > 0.0 {
                b = phi;
            } else {
                a = phi;
            }
            let mut next = phi - f / self.slope_at(phi);
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if b - a < 1e-15 {
                break;
            }
            phi = next;
        }
        Ok(phi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { resamples: 500, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub phi_hat: f64,
    /// Bootstrap variance of `phi_hat`.
    pub var_phi: f64,
    pub mu: usize,
    /// `1 / (mu var_phi)`; absent when `var_phi` vanishes.
    pub sensitivity: Option<f64>,
    pub bootstrap_se: f64,
    /// Bootstrap resamples left out because their mean left the curve.
    pub rejected_resamples: usize,
}

/// SplitMix64 finalizer, used to derive independent seeds from a master seed.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Values of `p1 - p2`.
pub fn differences(records: &[QuadratureRecord]) -> Vec<f64> {
    records.iter().map(QuadratureRecord::difference).collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Largest fraction of bootstrap resamples whose mean may fall outside the
/// calibration range before the bootstrap is abandoned.
pub const MAX_REJECTED_FRACTION: f64 = 0.05;

/// Phase estimates of a bootstrap run.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapEstimates {
    pub estimates: Vec<f64>,
    /// Resamples whose mean fell outside the calibration range.
    pub rejected: usize,
}

/// Phase estimates from `boot.resamples` resamples of size `size`, drawn
/// with replacement from `x`.
///
/// Resamples whose mean leaves the calibration range are left out and
/// counted; more than [`MAX_REJECTED_FRACTION`] of them is an error.
pub fn bootstrap_estimates(
    x: &[f64],
    size: usize,
    curve: &CalibrationCurve,
    boot: BootstrapConfig,
) -> Result<BootstrapEstimates> {
    if x.is_empty() || size == 0 {
        return Err(Error::InsufficientSamples {
            got: x.len().min(size),
            need: 1,
        });
    }
    let raw: Vec<Result<f64>> = (0..boot.resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(boot.seed);
            rng.set_stream(b as u64);
            let sum: f64 = (0..size).map(|_| x[rng.random_range(0..x.len())]).sum();
            curve.invert(sum / size as f64)
        })
        .collect();
    let mut estimates = Vec::with_capacity(raw.len());
    let mut rejected = 0;
    let mut first_error = None;
    for r in raw {
        match r {
            Ok(phi) => estimates.push(phi),
            Err(e @ Error::OutOfRange { .. }) => {
                rejected += 1;
                first_error.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    if rejected as f64 > MAX_REJECTED_FRACTION * boot.resamples as f64 {
        return Err(first_error.expect("rejections carry an error"));
    }
    Ok(BootstrapEstimates { estimates, rejected })
}

/// Inverts the sample mean of `p1 - p2` and bootstraps its variance.
pub fn estimate_phase(
    samples: &[QuadratureRecord],
    curve: &CalibrationCurve,
    boot: BootstrapConfig,
) -> Result<EstimationResult> {
    estimate_from_differences(&differences(samples), curve, boot)
}

pub fn estimate_from_differences(
    x: &[f64],
    curve: &CalibrationCurve,
    boot: BootstrapConfig,
) -> Result<EstimationResult> {
    let mu = x.len();
    if mu < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: mu,
            need: MIN_SAMPLES,
        });
    }
    if boot.resamples < 2 {
        return Err(Error::config("bootstrap", "need at least two bootstrap resamples"));
    }
    let phi_hat = curve.invert(mean(x))?;
    let boot = bootstrap_estimates(x, mu, curve, boot)?;
    let var_phi = sample_variance(&boot.estimates);
    Ok(EstimationResult {
        phi_hat,
        var_phi,
        mu,
        sensitivity: (var_phi > 0.0).then(|| 1.0 / (mu as f64 * var_phi)),
        bootstrap_se: var_phi.sqrt(),
        rejected_resamples: boot.rejected,
    })
}

/// Independent estimates on consecutive sets of `set_size` records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetEstimates {
    pub sets: Vec<EstimationResult>,
    pub phi_mean: f64,
    /// Standard deviation of the per-set `phi_hat`, the error bar of one set.
    pub phi_sd: f64,
}

/// Splits `samples` into `len / set_size` full sets (the remainder is
/// dropped) and estimates each one.
pub fn estimate_in_sets(
    samples: &[QuadratureRecord],
    set_size: usize,
    curve: &CalibrationCurve,
    boot: BootstrapConfig,
) -> Result<SetEstimates> {
    if set_size < MIN_SAMPLES {
        return Err(Error::config("set_size", "sets need at least two records"));
    }
    let count = samples.len() / set_size;
    if count < 2 {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: 2 * set_size,
        });
    }
    let sets = samples
        .chunks_exact(set_size)
        .enumerate()
        .map(|(i, chunk)| {
            let boot = BootstrapConfig {
                seed: derive_seed(boot.seed, i as u64),
                ..boot
            };
            estimate_phase(chunk, curve, boot)
        })
        .collect::<Result<Vec<_>>>()?;
    let phis: Vec<f64> = sets.iter().map(|r| r.phi_hat).collect();
    Ok(SetEstimates {
        phi_mean: mean(&phis),
        phi_sd: sample_variance(&phis).sqrt(),
        sets,
    })
}

/// Estimator variance for `mu` records, from resamples of a larger pool.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResampledVariance {
    pub mu: usize,
    pub resamples: usize,
    pub phi_mean: f64,
    pub var_phi: f64,
    /// Standard error of `var_phi` from the spread of the resampled estimates.
    pub var_phi_se: f64,
    pub sensitivity: Option<f64>,
    pub sensitivity_se: Option<f64>,
    pub rejected_resamples: usize,
}

/// Draws `boot.resamples` sets of `mu` records with replacement from `pool`
/// and reports the variance of their phase estimates.
///
/// The standard error of the variance uses the fourth central moment of the
/// resampled estimates, `sqrt((m4 - v^2) / B)`.
pub fn resampled_variance(
    pool: &[f64],
    mu: usize,
    curve: &CalibrationCurve,
    boot: BootstrapConfig,
) -> Result<ResampledVariance> {
    if mu < MIN_SAMPLES || pool.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: mu.min(pool.len()),
            need: MIN_SAMPLES,
        });
    }
    if boot.resamples < 2 {
        return Err(Error::config("bootstrap", "need at least two bootstrap resamples"));
    }
    let BootstrapEstimates { estimates, rejected } = bootstrap_estimates(pool, mu, curve, boot)?;
    if estimates.len() < 2 {
        return Err(Error::InsufficientSamples {
            got: estimates.len(),
            need: 2,
        });
    }
    let b = estimates.len() as f64;
    let phi_mean = mean(&estimates);
    let var_phi = sample_variance(&estimates);
    let m4 = estimates.iter().map(|v| (v - phi_mean).powi(4)).sum::<f64>() / b;
    let m2 = var_phi * (b - 1.0) / b;
    let var_phi_se = ((m4 - m2 * m2).max(0.0) / b).sqrt();
    let sensitivity = (var_phi > 0.0).then(|| 1.0 / (mu as f64 * var_phi));
    Ok(ResampledVariance {
        mu,
        resamples: estimates.len(),
        phi_mean,
        var_phi,
        var_phi_se,
        sensitivity,
        sensitivity_se: sensitivity.map(|s| s * var_phi_se / var_phi),
        rejected_resamples: rejected,
    })
}

/// One row of the estimator variance against sample size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuSweepRow {
    pub mu: usize,
    pub var_phi: f64,
    pub var_phi_se: f64,
    /// `1 / (mu S)` with `S` the lossy sensitivity at `pi`.
    pub theory: f64,
}

pub fn mu_sweep(
    pool: &[f64],
    mus: &[usize],
    curve: &CalibrationCurve,
    boot: BootstrapConfig,
) -> Result<Vec<MuSweepRow>> {
    let s = lossy_sensitivity(curve.alpha(), curve.efficiency());
    mus.iter()
        .enumerate()
        .map(|(i, &mu)| {
            let boot = BootstrapConfig {
                seed: derive_seed(boot.seed, i as u64),
                ..boot
            };
            let r = resampled_variance(pool, mu, curve, boot)?;
            Ok(MuSweepRow {
                mu,
                var_phi: r.var_phi,
                var_phi_se: r.var_phi_se,
                theory: 1.0 / (mu as f64 * s),
            })
        })
        .collect()
}

/// Settings shared by all rows of a sensitivity scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub mu: usize,
    pub pool_size: usize,
    pub phi_true: f64,
    pub calibration_points: usize,
    pub bootstrap: BootstrapConfig,
    pub sampler: SamplerConfig,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            mu: 200,
            pool_size: 50_000,
            phi_true: PI,
            calibration_points: 1201,
            bootstrap: BootstrapConfig::default(),
            sampler: SamplerConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub alpha: f64,
    pub s_sim: Option<f64>,
    pub s_sim_se: Option<f64>,
    pub s_theory: f64,
    pub eta_p_used: f64,
    /// `"ok"` or the error that stopped this row.
    pub status: String,
}

/// Simulated and theoretical sensitivity for each seed amplitude.
///
/// Every row simulates a pool of `pool_size` records at `phi_true` and
/// resamples sets of `mu` from it. Row failures are recorded in `status`.
pub fn sensitivity_vs_alpha(
    alphas: &[f64],
    eff_model: &EmpiricalEtaP,
    eta_d: f64,
    settings: &ScanSettings,
) -> Result<Vec<SensitivityRow>> {
    let mut rows = Vec::with_capacity(alphas.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::config("alphas", format!("{alpha} is not a positive real amplitude")));
        }
        let eta_p = eff_model.eta_p(alpha);
        let eff = EfficiencyPair::new(eta_p, eta_d)?;
        let s_theory = lossy_sensitivity(alpha, eff);
        let simulated = (|| -> Result<ResampledVariance> {
            let spec = HeraldedStateSpec::real(alpha, settings.phi_true)?;
            let sampler_cfg = SamplerConfig {
                seed: derive_seed(settings.sampler.seed, i as u64),
                ..settings.sampler.clone()
            };
            let pool = differences(&HeraldedSampler::new(spec, eff, sampler_cfg)?.draw(settings.pool_size));
            let curve = CalibrationCurve::around_pi(alpha, eff, settings.calibration_points)?;
            let boot = BootstrapConfig {
                seed: derive_seed(settings.bootstrap.seed, i as u64),
                ..settings.bootstrap
            };
            resampled_variance(&pool, settings.mu, &curve, boot)
        })();
        rows.push(match simulated {
            Ok(r) => SensitivityRow {
                alpha,
                s_sim: r.sensitivity,
                s_sim_se: r.sensitivity_se,
                s_theory,
                eta_p_used: eta_p,
                status: "ok".to_string(),
            },
            Err(e) => SensitivityRow {
                alpha,
                s_sim: None,
                s_sim_se: None,
                s_theory,
                eta_p_used: eta_p,
                status: e.to_string(),
            },
        });
    }
    Ok(rows)
}

fn format_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, .. } | csv::ErrorKind::Utf8 { pos, .. } => {
            pos.as_ref().map(|p| p.line())
        }
        csv::ErrorKind::Deserialize { pos, .. } => pos.as_ref().map(|p| p.line()),
        _ => None,
    };
    if let csv::ErrorKind::Io(io) = e.kind() {
        return Error::io(path, std::io::Error::new(io.kind(), io.to_string()));
    }
    format_error(path, line.unwrap_or(0), e.to_string())
}

/// Reads a sample file written by [`crate::sampler::sample_stream_to_file`].
///
/// Lines starting with `#` are ignored, the header must be `p1,p2` and every
/// value must parse to a finite number.
pub fn ingest_samples(path: &Path) -> Result<Vec<QuadratureRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["p1", "p2"] {
        let line = header.position().map_or(1, |p| p.line());
        return Err(format_error(path, line, format!("expected header `p1,p2`, found `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = [0.0; 2];
        for (slot, (field, name)) in values.iter_mut().zip(record.iter().zip(["p1", "p2"])) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| format_error(path, line, format!("`{field}` is not a number ({name})")))?;
            if !v.is_finite() {
                return Err(format_error(path, line, format!("non-finite value `{field}` ({name})")));
            }
            *slot = v;
        }
        out.push(QuadratureRecord {
            p1: values[0],
            p2: values[1],
        });
    }
    Ok(out)
}

/// The `.meta.json` sidecar of a sample file, if present.
pub fn ingest_metadata(path: &Path) -> Result<Option<SampleMetadata>> {
    let meta = metadata_path(path);
    match std::fs::read_to_string(&meta) {
        Ok(text) => Ok(Some(serde_json::from_str(&text)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(meta, e)),
    }
}
