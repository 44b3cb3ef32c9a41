//! Closed-form quadrature moments of the heralded state
//! `|Psi(phi)> = N (a1^dag + e^{i phi} a2^dag)|alpha>|alpha>`.
//!
//! Two normalization constants appear and are kept apart:
//! [`HeraldedStateSpec::norm_sq`] is the squared norm
//! `2(1 + |alpha|^2 (1 + cos phi))` of the unnormalized vector, and
//! [`HeraldedStateSpec::norm_amp`] is the amplitude prefactor
//! `1 / sqrt(norm_sq)`.
//!
//! Mode-2 expressions are the mode-1 ones with `phi -> -phi`.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;

use crate::error::{ensure_finite, Result};
use crate::fock::Mode;

/// Seed amplitude and remote phase of the heralded state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeraldedStateSpec {
    alpha: Complex64,
    phi: f64,
}

impl HeraldedStateSpec {
    /// `phi` is reduced to `[0, 2 pi)`.
    pub fn new(alpha: Complex64, phi: f64) -> Result<Self> {
        ensure_finite(alpha.re, "alpha")?;
        ensure_finite(alpha.im, "alpha")?;
        ensure_finite(phi, "phi")?;
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self { alpha, phi })
    }

    pub fn real(alpha: f64, phi: f64) -> Result<Self> {
        Self::new(Complex64::new(alpha, 0.0), phi)
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn with_phi(&self, phi: f64) -> Result<Self> {
        Self::new(self.alpha, phi)
    }

    /// `2(1 + |alpha|^2 (1 + cos phi))`.
    pub fn norm_sq(&self) -> f64 {
        2.0 * (1.0 + self.alpha.norm_sqr() * (1.0 + self.phi.cos()))
    }

    /// `1 / sqrt(norm_sq)`.
    pub fn norm_amp(&self) -> f64 {
        self.norm_sq().sqrt().recip()
    }

    /// Phase entering the mode-1 formulas for the given mode.
    fn signed_phi(&self, mode: Mode) -> f64 {
        match mode {
            Mode::One => self.phi,
            Mode::Two => -self.phi,
        }
    }
}

/// `alpha e^{-i theta}`.
fn rotated(alpha: Complex64, lo_phase: f64) -> Complex64 {
    alpha * Complex64::from_polar(1.0, -lo_phase)
}

fn first_moment_raw(alpha: Complex64, phi: f64, lo_phase: f64) -> f64 {
    let a2 = alpha.norm_sqr();
    let at = rotated(alpha, lo_phase);
    let n = 2.0 * (1.0 + a2 * (1.0 + phi.cos()));
    let value = 2.0 * (at * Complex64::from_polar(1.0, -phi)).re
        + 2.0 * at.re * (2.0 * a2 * (phi.cos() + 1.0) + 3.0);
    value / (2.0 * n)
}

/// `d/dphi` of [`first_moment_raw`].
fn first_moment_raw_dphi(alpha: Complex64, phi: f64, lo_phase: f64) -> f64 {
    let a2 = alpha.norm_sqr();
    let at = rotated(alpha, lo_phase);
    let (s, c) = phi.sin_cos();
    let f = 2.0 * (at * Complex64::from_polar(1.0, -phi)).re + 2.0 * at.re * (2.0 * a2 * (c + 1.0) + 3.0);
    let df = 2.0 * (at * Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, -phi)).re
        - 4.0 * at.re * a2 * s;
    let g = 4.0 * (1.0 + a2 * (1.0 + c));
    let dg = -4.0 * a2 * s;
    (df * g - f * dg) / (g * g)
}

/// `<q_mode(lo_phase)>`.
pub fn first_moment(spec: &HeraldedStateSpec, mode: Mode, lo_phase: f64) -> f64 {
    first_moment_raw(spec.alpha, spec.signed_phi(mode), lo_phase)
}

/// `d/dphi <q_mode(lo_phase)>`.
pub fn first_moment_derivative(spec: &HeraldedStateSpec, mode: Mode, lo_phase: f64) -> f64 {
    match mode {
        Mode::One => first_moment_raw_dphi(spec.alpha, spec.phi, lo_phase),
        Mode::Two => -first_moment_raw_dphi(spec.alpha, -spec.phi, lo_phase),
    }
}

/// Ordered product `<q_i(theta_1) q_j(theta_2)>`, complex in general.
pub fn ordered_second_moment(
    spec: &HeraldedStateSpec,
    modes: (Mode, Mode),
    lo_phases: (f64, f64),
) -> Complex64 {
    let alpha = spec.alpha;
    let a2 = alpha.norm_sqr();
    let (t1, t2) = lo_phases;
    match modes {
        (Mode::One, Mode::One) | (Mode::Two, Mode::Two) => {
            let phi = spec.signed_phi(modes.0);
            let c = phi.cos();
            let n = 2.0 * (1.0 + a2 * (1.0 + c));
            let prod = rotated(alpha, t1) * rotated(alpha, t2);
            let base = a2 * (c + 1.0) + 2.0;
            let value = prod * (Complex64::from_polar(1.0, -phi) + base)
                + prod.conj() * (Complex64::from_polar(1.0, phi) + base)
                + (t1 - t2).cos() * (2.0 * a2 * a2 * (c + 1.0) + 2.0 * a2 * (c + 2.0) + 1.0)
                + Complex64::from_polar(1.0, -(t1 - t2)) * (a2 * (c + 1.0) + 1.0);
            value / (2.0 * n)
        }
        (Mode::One, Mode::Two) => Complex64::new(cross_moment(spec, t1, t2), 0.0),
        (Mode::Two, Mode::One) => Complex64::new(cross_moment(spec, t2, t1), 0.0),
    }
}

/// `<q_1(theta_1) q_2(theta_2)>`; real since the modes commute.
fn cross_moment(spec: &HeraldedStateSpec, t1: f64, t2: f64) -> f64 {
    let alpha = spec.alpha;
    let a2 = alpha.norm_sqr();
    let phi = spec.phi;
    let c = phi.cos();
    let n = 2.0 * (1.0 + a2 * (1.0 + c));
    let r1 = rotated(alpha, t1);
    let r2 = rotated(alpha, t2);
    let value = 4.0 * a2 * (t1 - t2).cos()
        + (2.0 * a2 + 1.0) * (t1 - t2 + phi).cos()
        + a2 * (c + 1.0) * (2.0 * r1.re) * (2.0 * r2.re)
        + (c + 2.0) * 2.0 * (r1 * r2).re;
    value / (2.0 * n)
}

/// Symmetrized second moment `(<q_i q_j> + <q_j q_i>) / 2`.
pub fn second_moment(spec: &HeraldedStateSpec, modes: (Mode, Mode), lo_phases: (f64, f64)) -> f64 {
    ordered_second_moment(spec, modes, lo_phases).re
}

/// Quadrature ordering `r = (x1, p1, x2, p2)`.
pub const QUADRATURES: [(Mode, f64); 4] = [
    (Mode::One, 0.0),
    (Mode::One, FRAC_PI_2),
    (Mode::Two, 0.0),
    (Mode::Two, FRAC_PI_2),
];

/// Means, covariance matrix and phase derivative of the means over
/// `r = (x1, p1, x2, p2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSet {
    pub mean: [f64; 4],
    pub gamma: [[f64; 4]; 4],
    pub d_vec: [f64; 4],
}

impl MomentSet {
    /// `(c . D)^2 / (c^T Gamma c)` for unnormalized coefficients, together
    /// with the variance `c^T Gamma c`.
    pub fn sensitivity_parts(&self, c: &[f64; 4]) -> (f64, f64) {
        let slope: f64 = c.iter().zip(&self.d_vec).map(|(a, b)| a * b).sum();
        let mut var = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                var += c[i] * self.gamma[i][j] * c[j];
            }
        }
        (slope, var)
    }

    /// Mean of `sum_i c_i r_i`.
    pub fn observable_mean(&self, c: &[f64; 4]) -> f64 {
        c.iter().zip(&self.mean).map(|(a, b)| a * b).sum()
    }
}

pub fn assemble(spec: &HeraldedStateSpec) -> MomentSet {
    let mut mean = [0.0; 4];
    let mut d_vec = [0.0; 4];
    for (i, &(mode, theta)) in QUADRATURES.iter().enumerate() {
        mean[i] = first_moment(spec, mode, theta);
        d_vec[i] = first_moment_derivative(spec, mode, theta);
    }
    let mut gamma = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let (mi, ti) = QUADRATURES[i];
            let (mj, tj) = QUADRATURES[j];
            let g = second_moment(spec, (mi, mj), (ti, tj)) - mean[i] * mean[j];
            gamma[i][j] = g;
            gamma[j][i] = g;
        }
    }
    MomentSet { mean, gamma, d_vec }
}
