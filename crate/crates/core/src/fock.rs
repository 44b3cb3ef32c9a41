//! Truncated two-mode Fock-space engine.
//!
//! Everything here is brute force: states are dense amplitude arrays indexed
//! by `(n1, n2)` with `0 <= n_i <= n_max`, density matrices are dense
//! `(n_max + 1)^2`-dimensional Hermitian matrices. The closed forms in
//! [`crate::moments`], [`crate::metrology`] and [`crate::noise`] are all
//! checked against this module.
//!
//! Quadratures use the half convention
//! `q(theta) = (a e^{-i theta} + a^dag e^{i theta}) / 2`, so `x = q(0)`,
//! `p = q(pi/2)` and the vacuum variance is `1/4`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ensure_finite, Error, Result};
use crate::noise::EfficiencyPair;

const TAIL_MASS_LIMIT: f64 = 1e-12;
const OVERFLOW_LIMIT: f64 = 1e-10;

/// One of the two signal modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
        }
    }
}

/// Maximum photon number kept in each mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockCutoff {
    n_max: usize,
}

impl FockCutoff {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::config("n_max", "Fock cutoff must be at least 1"));
        }
        Ok(Self { n_max })
    }

    /// Starts from `ceil(|alpha|^2 + 6|alpha| + 12)` (the Poisson tail of the
    /// seed plus room for the added photon) and grows until the tail-mass
    /// check passes.
    pub fn for_alpha(alpha_abs: f64) -> Self {
        let n = (alpha_abs * alpha_abs + 6.0 * alpha_abs + 12.0).ceil();
        let mut cutoff = Self { n_max: n as usize };
        while cutoff.check(alpha_abs).is_err() {
            cutoff.n_max += 1;
        }
        cutoff
    }

    /// The same cutoff raised by `extra` photons per mode.
    ///
    /// Second-order products such as `q q` on states near the tail-mass
    /// threshold can push more than `1e-10` of weight past the cutoff; four
    /// extra photons keep them inside.
    pub fn with_margin(self, extra: usize) -> Self {
        Self {
            n_max: self.n_max + extra,
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Single-mode dimension `n_max + 1`.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Poisson weight of a coherent state `|alpha>` above `n_max`.
    pub fn coherent_tail_mass(&self, alpha_abs: f64) -> f64 {
        let mean = alpha_abs * alpha_abs;
        if mean == 0.0 {
            return 0.0;
        }
        let mut term = (-mean).exp();
        for n in 1..=self.n_max + 1 {
            term *= mean / n as f64;
        }
        let mut tail = 0.0;
        let mut n = self.n_max + 1;
        loop {
            tail += term;
            n += 1;
            term *= mean / n as f64;
            if (n as f64) > mean && term < 1e-20 * tail.max(1e-300) {
                break;
            }
            if term == 0.0 {
                break;
            }
        }
        tail
    }

    pub fn check(&self, alpha_abs: f64) -> Result<()> {
        let tail_mass = self.coherent_tail_mass(alpha_abs);
        if tail_mass >= TAIL_MASS_LIMIT {
            return Err(Error::CutoffTooSmall {
                n_max: self.n_max,
                alpha_abs,
                tail_mass,
            });
        }
        Ok(())
    }

    fn index(&self, n1: usize, n2: usize) -> usize {
        n1 * self.dim() + n2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ladder {
    Lower(Mode),
    Raise(Mode),
}

/// Polynomial in the ladder operators of both modes.
///
/// Each term is a coefficient times an ordered product; the rightmost factor
/// acts first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Operator {
    terms: Vec<(Complex64, Vec<Ladder>)>,
}

impl Operator {
    pub fn identity() -> Self {
        Self {
            terms: vec![(Complex64::new(1.0, 0.0), Vec::new())],
        }
    }

    pub fn annihilate(mode: Mode) -> Self {
        Self {
            terms: vec![(Complex64::new(1.0, 0.0), vec![Ladder::Lower(mode)])],
        }
    }

    pub fn create(mode: Mode) -> Self {
        Self {
            terms: vec![(Complex64::new(1.0, 0.0), vec![Ladder::Raise(mode)])],
        }
    }

    pub fn number(mode: Mode) -> Self {
        Self::create(mode) * Self::annihilate(mode)
    }

    /// `(a e^{-i theta} + a^dag e^{i theta}) / 2` on `mode`.
    pub fn quadrature(mode: Mode, theta: f64) -> Self {
        let phase = Complex64::from_polar(0.5, -theta);
        Self::annihilate(mode).scale(phase) + Self::create(mode).scale(phase.conj())
    }

    pub fn scale(mut self, factor: Complex64) -> Self {
        for (c, _) in &mut self.terms {
            *c *= factor;
        }
        self
    }

    /// Applies the operator to `amps`, returning the image and the squared
    /// norm of the amplitude pushed above the cutoff.
    fn apply(&self, amps: &[Complex64], cutoff: FockCutoff) -> (Vec<Complex64>, f64) {
        let mut out = vec![Complex64::default(); amps.len()];
        let mut discarded = 0.0;
        let mut work = Vec::with_capacity(amps.len());
        let mut next = vec![Complex64::default(); amps.len()];
        for (coef, factors) in &self.terms {
            work.clear();
            work.extend_from_slice(amps);
            for ladder in factors.iter().rev() {
                discarded += apply_ladder(*ladder, &work, &mut next, cutoff) * coef.norm_sqr();
                std::mem::swap(&mut work, &mut next);
            }
            for (o, w) in out.iter_mut().zip(&work) {
                *o += coef * w;
            }
        }
        (out, discarded)
    }
}

fn apply_ladder(
    ladder: Ladder,
    input: &[Complex64],
    output: &mut [Complex64],
    cutoff: FockCutoff,
) -> f64 {
    let d = cutoff.dim();
    let n_max = cutoff.n_max();
    output.iter_mut().for_each(|o| *o = Complex64::default());
    let mut discarded = 0.0;
    for n1 in 0..d {
        for n2 in 0..d {
            let amp = input[cutoff.index(n1, n2)];
            if amp == Complex64::default() {
                continue;
            }
            match ladder {
                Ladder::Lower(Mode::One) if n1 > 0 => {
                    output[cutoff.index(n1 - 1, n2)] += amp * (n1 as f64).sqrt();
                }
                Ladder::Lower(Mode::Two) if n2 > 0 => {
                    output[cutoff.index(n1, n2 - 1)] += amp * (n2 as f64).sqrt();
                }
                Ladder::Raise(Mode::One) => {
                    let scaled = amp * ((n1 + 1) as f64).sqrt();
                    if n1 < n_max {
                        output[cutoff.index(n1 + 1, n2)] += scaled;
                    } else {
                        discarded += scaled.norm_sqr();
                    }
                }
                Ladder::Raise(Mode::Two) => {
                    let scaled = amp * ((n2 + 1) as f64).sqrt();
                    if n2 < n_max {
                        output[cutoff.index(n1, n2 + 1)] += scaled;
                    } else {
                        discarded += scaled.norm_sqr();
                    }
                }
                _ => {}
            }
        }
    }
    discarded
}

impl Add for Operator {
    type Output = Operator;
    fn add(mut self, rhs: Operator) -> Operator {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        self + (-rhs)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ca, fa) in &self.terms {
            for (cb, fb) in &rhs.terms {
                let mut factors = fa.clone();
                factors.extend_from_slice(fb);
                terms.push((ca * cb, factors));
            }
        }
        Operator { terms }
    }
}

/// Coherent amplitudes `e^{-|alpha|^2/2} alpha^n / sqrt(n!)` for `n <= n_max`.
pub fn coherent_amplitudes(alpha: Complex64, cutoff: FockCutoff) -> Vec<Complex64> {
    let mut amps = Vec::with_capacity(cutoff.dim());
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps.push(c);
    for n in 1..cutoff.dim() {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    amps
}

/// Pure two-mode state with unit norm.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    amplitudes: Vec<Complex64>,
    cutoff: FockCutoff,
}

impl TwoModeState {
    /// Normalizes `amplitudes` (indexed `n1 * (n_max + 1) + n2`).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, cutoff: FockCutoff) -> Result<Self> {
        let d = cutoff.dim();
        if amplitudes.len() != d * d {
            return Err(Error::config(
                "amplitudes",
                format!("expected {} entries, got {}", d * d, amplitudes.len()),
            ));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::config("amplitudes", "state vector has zero or non-finite norm"));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self { amplitudes, cutoff })
    }

    /// Product coherent state `|alpha1>|alpha2>`.
    pub fn coherent_pair(alpha1: Complex64, alpha2: Complex64, cutoff: FockCutoff) -> Result<Self> {
        cutoff.check(alpha1.norm().max(alpha2.norm()))?;
        let c1 = coherent_amplitudes(alpha1, cutoff);
        let c2 = coherent_amplitudes(alpha2, cutoff);
        let amps = c1
            .iter()
            .flat_map(|a| c2.iter().map(move |b| a * b))
            .collect();
        Self::from_amplitudes(amps, cutoff)
    }

    pub fn vacuum(cutoff: FockCutoff) -> Self {
        let d = cutoff.dim();
        let mut amplitudes = vec![Complex64::default(); d * d];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes, cutoff }
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> Complex64 {
        self.amplitudes[self.cutoff.index(n1, n2)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &TwoModeState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        let (image, discarded) = op.apply(&self.amplitudes, self.cutoff);
        if discarded > OVERFLOW_LIMIT {
            return Err(Error::CutoffOverflow { discarded });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&image)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn to_density_matrix(&self) -> TwoModeDensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        TwoModeDensityMatrix {
            matrix: &v * v.adjoint(),
            cutoff: self.cutoff,
        }
    }
}

/// Unnormalized `(a1^dag + e^{i phi} a2^dag)|alpha>|alpha>` in the Fock basis.
///
/// Its squared norm is `2(1 + (1 + cos phi)|alpha|^2)` up to truncation.
pub fn heralded_vector(alpha: Complex64, phi: f64, cutoff: FockCutoff) -> Result<Vec<Complex64>> {
    ensure_finite(alpha.re, "alpha")?;
    ensure_finite(alpha.im, "alpha")?;
    ensure_finite(phi, "phi")?;
    cutoff.check(alpha.norm())?;
    let c = coherent_amplitudes(alpha, cutoff);
    let d = cutoff.dim();
    let seed: Vec<Complex64> = c.iter().flat_map(|a| c.iter().map(move |b| a * b)).collect();
    let op = Operator::create(Mode::One) + Operator::create(Mode::Two).scale(Complex64::from_polar(1.0, phi));
    let (image, _) = op.apply(&seed, cutoff);
    debug_assert_eq!(image.len(), d * d);
    Ok(image)
}

/// Normalized heralded state `N (a1^dag + e^{i phi} a2^dag)|alpha>|alpha>`.
pub fn build_heralded_state(alpha: Complex64, phi: f64, cutoff: FockCutoff) -> Result<TwoModeState> {
    TwoModeState::from_amplitudes(heralded_vector(alpha, phi, cutoff)?, cutoff)
}

/// Dense two-mode density matrix, rows and columns indexed like
/// [`TwoModeState`] amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeDensityMatrix {
    matrix: DMatrix<Complex64>,
    cutoff: FockCutoff,
}

impl TwoModeDensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>, cutoff: FockCutoff) -> Result<Self> {
        let d = cutoff.dim();
        if matrix.nrows() != d * d || matrix.ncols() != d * d {
            return Err(Error::InvalidDensityMatrix(format!(
                "expected {0}x{0} matrix, got {1}x{2}",
                d * d,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dm = Self { matrix, cutoff };
        dm.validate()?;
        Ok(dm)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.matrix)
    }

    /// Checks Hermiticity (1e-12), unit trace (1e-10) and positivity (-1e-10).
    pub fn validate(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > 1e-12 {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} differs from 1")));
        }
        let min_eig = self.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// `w * self + (1 - w) * other`.
    pub fn mix(&self, weight: f64, other: &TwoModeDensityMatrix) -> TwoModeDensityMatrix {
        assert_eq!(self.cutoff, other.cutoff, "mixing states with different cutoffs");
        TwoModeDensityMatrix {
            matrix: self.matrix.scale(weight) + other.matrix.scale(1.0 - weight),
            cutoff: self.cutoff,
        }
    }

    /// Pure-loss channel of transmission `eta` on one mode, applied through
    /// its Kraus operators `K_k = sum_n sqrt(C(n, k) eta^(n-k) (1-eta)^k) |n-k><n|`.
    pub fn apply_loss(&self, mode: Mode, eta: f64) -> Result<TwoModeDensityMatrix> {
        check_efficiency(eta, "eta_d")?;
        let d = self.cutoff.dim();
        let kraus = loss_kraus_table(eta, self.cutoff);
        let idx = |n1: usize, n2: usize| n1 * d + n2;
        let mut out = DMatrix::<Complex64>::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let kmax = (d - 1 - a).min(d - 1 - b);
                for (k, row_k) in kraus.iter().enumerate().take(kmax + 1) {
                    let w = row_k[a] * row_k[b];
                    if w == 0.0 {
                        continue;
                    }
                    for s in 0..d {
                        for t in 0..d {
                            let (row, col, src_row, src_col) = match mode {
                                Mode::One => (idx(a, s), idx(b, t), idx(a + k, s), idx(b + k, t)),
                                Mode::Two => (idx(s, a), idx(t, b), idx(s, a + k), idx(t, b + k)),
                            };
                            out[(row, col)] += self.matrix[(src_row, src_col)] * w;
                        }
                    }
                }
            }
        }
        Ok(TwoModeDensityMatrix {
            matrix: out,
            cutoff: self.cutoff,
        })
    }

    /// `Tr(rho O)`.
    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        let n = self.matrix.nrows();
        let mut total = Complex64::default();
        let mut discarded = 0.0;
        for j in 0..n {
            let column = self.matrix.column(j);
            let (image, lost) = op.apply(column.as_slice(), self.cutoff);
            discarded += lost;
            total += image[j];
        }
        if discarded > OVERFLOW_LIMIT {
            return Err(Error::CutoffOverflow { discarded });
        }
        Ok(total)
    }

    /// Partial transpose with respect to mode 2.
    pub fn partial_transpose(&self) -> DMatrix<Complex64> {
        let d = self.cutoff.dim();
        DMatrix::from_fn(d * d, d * d, |row, col| {
            let (n1, n2) = (row / d, row % d);
            let (m1, m2) = (col / d, col % d);
            self.matrix[(n1 * d + m2, m1 * d + n2)]
        })
    }
}

impl From<&TwoModeState> for TwoModeDensityMatrix {
    fn from(state: &TwoModeState) -> Self {
        state.to_density_matrix()
    }
}

fn check_efficiency(value: f64, name: &'static str) -> Result<f64> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::EfficiencyOutOfRange { name, value });
    }
    Ok(value)
}

/// `table[k][j] = sqrt(C(j + k, k) eta^j (1 - eta)^k)`, the matrix element
/// `<j| K_k |j + k>`.
fn loss_kraus_table(eta: f64, cutoff: FockCutoff) -> Vec<Vec<f64>> {
    let d = cutoff.dim();
    (0..d)
        .map(|k| {
            (0..d)
                .map(|j| {
                    if j + k >= d {
                        return 0.0;
                    }
                    let binom = (1..=k).fold(1.0, |acc, i| acc * (j + i) as f64 / i as f64);
                    (binom * eta.powi(j as i32) * (1.0 - eta).powi(k as i32)).sqrt()
                })
                .collect()
        })
        .collect()
}

fn hermiticity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    m.clone().symmetric_eigenvalues().iter().cloned().collect()
}

/// `eta_p |Psi(phi)><Psi(phi)| + (1 - eta_p)|alpha, alpha><alpha, alpha|`,
/// then loss of transmission `eta_d` on each mode.
pub fn apply_mixture_and_loss(
    alpha: Complex64,
    phi: f64,
    eff: EfficiencyPair,
    cutoff: FockCutoff,
) -> Result<TwoModeDensityMatrix> {
    check_efficiency(eff.eta_p(), "eta_p")?;
    check_efficiency(eff.eta_d(), "eta_d")?;
    let ideal = build_heralded_state(alpha, phi, cutoff)?.to_density_matrix();
    let seed = TwoModeState::coherent_pair(alpha, alpha, cutoff)?.to_density_matrix();
    let mixed = ideal.mix(eff.eta_p(), &seed);
    if eff.eta_d() == 1.0 {
        return Ok(mixed);
    }
    mixed.apply_loss(Mode::One, eff.eta_d())?.apply_loss(Mode::Two, eff.eta_d())
}

/// Twice the summed magnitude of the negative eigenvalues of the partial
/// transpose, i.e. `||rho^{T_2}||_1 - 1`.
///
/// This normalization gives 1 for `(|10> - |01>)/sqrt 2` and 0 for product
/// states.
pub fn partial_transpose_negativity(dm: &TwoModeDensityMatrix) -> Result<f64> {
    let deviation = dm.hermiticity_deviation();
    if deviation > 1e-12 {
        return Err(Error::NotHermitian { deviation });
    }
    let negative: f64 = hermitian_eigenvalues(&dm.partial_transpose())
        .into_iter()
        .filter(|&l| l < 0.0)
        .map(f64::abs)
        .sum();
    Ok(2.0 * negative)
}
