//! Monte Carlo heralded two-mode homodyne records.
//!
//! In the displaced frame `|alpha>|alpha> = D(alpha) D(alpha)|00>` the ideal
//! state becomes
//!
//! ```text
//! (alpha* (1 + e^{i phi})|00> + |10> + e^{i phi}|01>) / sqrt(norm_sq)
//! ```
//!
//! and the displacement only shifts each quadrature by
//! `Re(alpha e^{-i theta})`. With `q_i = p_i - shift_i` the joint density is
//!
//! ```text
//! n(q1) n(q2) |c0 + u1 q1 + u2 q2|^2 / norm_sq,
//! c0 = alpha* (1 + e^{i phi}),  u1 = 2 e^{-i theta1},  u2 = 2 e^{i (phi - theta2)}
//! ```
//!
//! where `n` is the normal density of variance `1/4`. Both the `q1` marginal
//! and the `q2 | q1` conditional have the form `n(q) (a q^2 + b q + c)` with
//! a closed-form CDF. The marginal is tabulated on the configured grid and
//! inverted by monotone cubic interpolation; the conditional changes with
//! every draw and is inverted directly.
//!
//! Imperfections act record by record: with probability `1 - eta_p` the
//! record comes from the product coherent state, and loss maps
//! `p -> sqrt(eta_d) p + sqrt(1 - eta_d) g` with `g ~ N(0, 1/4)` per mode.
//! A beam splitter with vacuum in the other port transforms quadratures
//! linearly, `q_out = sqrt(eta) q_in + sqrt(1 - eta) q_vac`, and the vacuum
//! quadrature is independent Gaussian noise, so this is exact for any input.

use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::interp::TabulatedInverseCdf;
use crate::moments::HeraldedStateSpec;
use crate::noise::EfficiencyPair;

/// Random generator used for all Monte Carlo streams.
pub const GENERATOR: &str = "ChaCha20 (rand_chacha 0.9), seed_from_u64(seed), stream = block index";

const MASS_LIMIT: f64 = 1e-10;
const VACUUM_SD: f64 = 0.5;

/// One heralded two-mode homodyne outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub p1: f64,
    pub p2: f64,
}

impl QuadratureRecord {
    /// Value of `p1 - p2`.
    pub fn difference(&self) -> f64 {
        self.p1 - self.p2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Half-width of the tabulation grid in quadrature units; `|alpha| + 6`
    /// when unset.
    pub grid_halfwidth: Option<f64>,
    pub grid_points: usize,
    /// Records per independent random stream.
    pub batch: usize,
    /// Local-oscillator phases of the two homodyne measurements.
    pub lo_phases: (f64, f64),
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            grid_halfwidth: None,
            grid_points: 4096,
            batch: 8192,
            lo_phases: (FRAC_PI_2, FRAC_PI_2),
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn halfwidth_for(&self, spec: &HeraldedStateSpec) -> f64 {
        self.grid_halfwidth.unwrap_or(spec.alpha().norm() + 6.0)
    }

    fn validate(&self) -> Result<()> {
        if self.grid_points < 16 {
            return Err(Error::config("grid_points", "need at least 16 grid points"));
        }
        if self.batch == 0 {
            return Err(Error::config("batch", "batch size must be positive"));
        }
        if let Some(w) = self.grid_halfwidth {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::config("grid_halfwidth", "must be positive and finite"));
            }
        }
        if !(self.lo_phases.0.is_finite() && self.lo_phases.1.is_finite()) {
            return Err(Error::config("lo_phases", "must be finite"));
        }
        Ok(())
    }
}

/// Density `n(q) (a q^2 + b q + c) / (a/4 + c)` with `n` the normal density
/// of variance `1/4`.
#[derive(Clone, Copy, Debug)]
struct GaussianQuadratic {
    a: f64,
    b: f64,
    c: f64,
}

fn normal_quarter(x: f64) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * x * x).exp()
}

/// `P(G <= x)` for `G ~ N(0, 1/4)`.
fn normal_quarter_cdf(x: f64) -> f64 {
    0.5 * erfc(-std::f64::consts::SQRT_2 * x)
}

impl GaussianQuadratic {
    fn mass(&self) -> f64 {
        0.25 * self.a + self.c
    }

    fn pdf(&self, x: f64) -> f64 {
        normal_quarter(x) * (self.a * x * x + self.b * x + self.c) / self.mass()
    }

    fn cdf(&self, x: f64) -> f64 {
        let n = normal_quarter(x);
        let value = self.mass() * normal_quarter_cdf(x) - 0.25 * self.b * n - 0.25 * self.a * x * n;
        (value / self.mass()).clamp(0.0, 1.0)
    }

    /// Safeguarded Newton iteration on `cdf(x) = u`.
    fn quantile(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = (-12.0, 12.0);
        let mut x = 0.0;
        for _ in 0..200 {
            let f = self.cdf(x) - u;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.pdf(x);
            let mut next = if d > 0.0 { x - f / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() < 1e-13 || hi - lo < 1e-13 {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Frame constants of the ideal state for one pair of LO phases.
#[derive(Clone, Copy, Debug)]
struct IdealFrame {
    shift: [f64; 2],
    c0: Complex64,
    u1: Complex64,
    u2: Complex64,
    norm_sq: f64,
}

impl IdealFrame {
    fn new(spec: &HeraldedStateSpec, lo_phases: (f64, f64)) -> Self {
        let alpha = spec.alpha();
        let phi = spec.phi();
        let shift = |theta: f64| (alpha * Complex64::from_polar(1.0, -theta)).re;
        let c0 = alpha.conj() * (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, phi));
        Self {
            shift: [shift(lo_phases.0), shift(lo_phases.1)],
            c0,
            u1: Complex64::from_polar(2.0, -lo_phases.0),
            u2: Complex64::from_polar(2.0, phi - lo_phases.1),
            norm_sq: spec.norm_sq(),
        }
    }

    fn pdf(&self, p1: f64, p2: f64) -> f64 {
        let q1 = p1 - self.shift[0];
        let q2 = p2 - self.shift[1];
        normal_quarter(q1) * normal_quarter(q2) * (self.c0 + self.u1 * q1 + self.u2 * q2).norm_sqr() / self.norm_sq
    }

    fn marginal(&self) -> GaussianQuadratic {
        GaussianQuadratic {
            a: self.u1.norm_sqr(),
            b: 2.0 * (self.c0.conj() * self.u1).re,
            c: self.c0.norm_sqr() + 0.25 * self.u2.norm_sqr(),
        }
    }

    fn conditional(&self, q1: f64) -> GaussianQuadratic {
        let w = self.c0 + self.u1 * q1;
        GaussianQuadratic {
            a: self.u2.norm_sqr(),
            b: 2.0 * (w.conj() * self.u2).re,
            c: w.norm_sqr(),
        }
    }
}

/// Joint density of `(q1(theta1), q2(theta2))` for the ideal heralded state.
pub fn joint_pdf(spec: &HeraldedStateSpec, lo_phases: (f64, f64), p1: f64, p2: f64) -> f64 {
    IdealFrame::new(spec, lo_phases).pdf(p1, p2)
}

/// Joint density of `(p1, p2)`.
pub fn joint_pdf_p(spec: &HeraldedStateSpec, p1: f64, p2: f64) -> f64 {
    joint_pdf(spec, (FRAC_PI_2, FRAC_PI_2), p1, p2)
}

/// Probability of the ideal `q1` marginal outside `[-halfwidth, halfwidth]`.
pub fn grid_mass_deficit(spec: &HeraldedStateSpec, cfg: &SamplerConfig) -> f64 {
    let frame = IdealFrame::new(spec, cfg.lo_phases);
    let m = frame.marginal();
    let w = cfg.halfwidth_for(spec);
    m.cdf(-w - frame.shift[0]) + (1.0 - m.cdf(w - frame.shift[0]))
}

/// Tabulated sampler for one state, efficiency pair and configuration.
///
/// Immutable after construction; blocks can be drawn from any thread.
#[derive(Clone, Debug)]
pub struct HeraldedSampler {
    spec: HeraldedStateSpec,
    eff: EfficiencyPair,
    cfg: SamplerConfig,
    frame: IdealFrame,
    marginal: TabulatedInverseCdf,
}

impl HeraldedSampler {
    pub fn new(spec: HeraldedStateSpec, eff: EfficiencyPair, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        let mass = grid_mass_deficit(&spec, &cfg);
        if !(mass < MASS_LIMIT) {
            return Err(Error::GridMass { mass });
        }
        let frame = IdealFrame::new(&spec, cfg.lo_phases);
        let w = cfg.halfwidth_for(&spec);
        let n = cfg.grid_points;
        let grid: Vec<f64> = (0..n)
            .map(|i| -w + 2.0 * w * i as f64 / (n - 1) as f64 - frame.shift[0])
            .collect();
        let m = frame.marginal();
        let cdf: Vec<f64> = grid.iter().map(|&q| m.cdf(q)).collect();
        let marginal = TabulatedInverseCdf::from_cdf(&grid, &cdf)?;
        Ok(Self {
            spec,
            eff,
            cfg,
            frame,
            marginal,
        })
    }

    pub fn spec(&self) -> &HeraldedStateSpec {
        &self.spec
    }

    pub fn efficiency(&self) -> EfficiencyPair {
        self.eff
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    fn draw_one<R: Rng>(&self, rng: &mut R) -> QuadratureRecord {
        let mix: f64 = rng.random();
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let [s1, s2] = self.frame.shift;
        let (p1, p2) = if mix < self.eff.eta_p() {
            let q1 = self.marginal.sample(u1);
            let q2 = self.frame.conditional(q1).quantile(u2);
            (q1 + s1, q2 + s2)
        } else {
            (s1 + VACUUM_SD * z[0], s2 + VACUUM_SD * z[1])
        };
        let t = self.eff.eta_d().sqrt();
        let r = (1.0 - self.eff.eta_d()).sqrt();
        QuadratureRecord {
            p1: t * p1 + r * VACUUM_SD * z[2],
            p2: t * p2 + r * VACUUM_SD * z[3],
        }
    }

    /// Records `[block * batch, min((block + 1) * batch, total))`, drawn from
    /// their own stream.
    pub fn block(&self, block: usize, total: usize) -> Vec<QuadratureRecord> {
        let start = block * self.cfg.batch;
        let end = (start + self.cfg.batch).min(total);
        if start >= end {
            return Vec::new();
        }
        let mut rng = ChaCha20Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(block as u64);
        (start..end).map(|_| self.draw_one(&mut rng)).collect()
    }

    fn block_count(&self, n: usize) -> usize {
        n.div_ceil(self.cfg.batch)
    }

    /// `n` records; identical for a given seed whatever the thread count.
    pub fn draw(&self, n: usize) -> Vec<QuadratureRecord> {
        let blocks: Vec<Vec<QuadratureRecord>> = (0..self.block_count(n))
            .into_par_iter()
            .map(|b| self.block(b, n))
            .collect();
        blocks.into_iter().flatten().collect()
    }
}

/// Convenience wrapper around [`HeraldedSampler::draw`].
pub fn draw(
    spec: HeraldedStateSpec,
    eff: EfficiencyPair,
    cfg: SamplerConfig,
    n: usize,
) -> Result<Vec<QuadratureRecord>> {
    Ok(HeraldedSampler::new(spec, eff, cfg)?.draw(n))
}

/// Sidecar describing how a sample file was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub software: String,
    pub alpha: (f64, f64),
    pub phi_true: Option<f64>,
    pub eta_p: f64,
    pub eta_d: f64,
    pub seed: u64,
    pub generator: String,
    pub grid_halfwidth: f64,
    pub grid_points: usize,
    pub batch: usize,
    pub lo_phases: (f64, f64),
    pub records: usize,
}

impl SampleMetadata {
    pub fn for_sampler(sampler: &HeraldedSampler, records: usize) -> Self {
        let spec = sampler.spec();
        let cfg = sampler.config();
        Self {
            software: format!("herald-sense {}", crate::VERSION),
            alpha: (spec.alpha().re, spec.alpha().im),
            phi_true: Some(spec.phi()),
            eta_p: sampler.efficiency().eta_p(),
            eta_d: sampler.efficiency().eta_d(),
            seed: cfg.seed,
            generator: GENERATOR.to_string(),
            grid_halfwidth: cfg.halfwidth_for(spec),
            grid_points: cfg.grid_points,
            batch: cfg.batch,
            lo_phases: cfg.lo_phases,
            records,
        }
    }
}

/// `samples.csv` -> `samples.meta.json`.
pub fn metadata_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

/// Writes `contents` through a temporary sibling file and a rename.
pub(crate) fn write_atomically(
    path: &Path,
    contents: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::config("out", format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut writer = BufWriter::new(file);
    contents(&mut writer)
        .and_then(|_| writer.flush())
        .map_err(|e| Error::io(&tmp, e))?;
    drop(writer);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn csv_banner() -> String {
    format!("# herald-sense {}\n", crate::VERSION)
}

/// Streams `n` records to `path` as CSV (`p1,p2`, 17 significant digits) and
/// writes the `.meta.json` sidecar. Returns the record count.
pub fn sample_stream_to_file(sampler: &HeraldedSampler, n: usize, path: &Path) -> Result<usize> {
    const BLOCKS_PER_FLUSH: usize = 16;
    write_atomically(path, |out| {
        out.write_all(csv_banner().as_bytes())?;
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record(["p1", "p2"])?;
        let blocks = sampler.block_count(n);
        let mut first = 0;
        while first < blocks {
            let last = (first + BLOCKS_PER_FLUSH).min(blocks);
            let chunk: Vec<Vec<QuadratureRecord>> = (first..last)
                .into_par_iter()
                .map(|b| sampler.block(b, n))
                .collect();
            for r in chunk.iter().flatten() {
                csv.write_record([format_float(r.p1), format_float(r.p2)])?;
            }
            csv.flush()?;
            first = last;
        }
        Ok(())
    })?;
    let meta = SampleMetadata::for_sampler(sampler, n);
    let json = serde_json::to_string_pretty(&meta)?;
    write_atomically(&metadata_path(path), |out| {
        out.write_all(json.as_bytes())?;
        out.write_all(b"\n")
    })?;
    Ok(n)
}
