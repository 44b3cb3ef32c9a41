//! Observable optimization and sensitivity bounds.
//!
//! For a linear quadrature observable `X = c . r` the moment-based
//! sensitivity is `S(c) = (c . D)^2 / (c^T Gamma c)`. Its maximum over `c`
//! is `D^T Gamma^{-1} D`, attained at `c ∝ Gamma^{-1} D`. Sensitivities here
//! are per measurement; the sample count enters only in [`crate::estimator`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{assemble, HeraldedStateSpec, MomentSet};

const MAX_CONDITION: f64 = 1e10;

/// Coefficients `(c_x1, c_p1, c_x2, c_p2)`, rescaled to Euclidean norm
/// `sqrt 2` so that `(0, 1, 0, -1)` is `p1 - p2` exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableCoefficients([f64; 4]);

impl ObservableCoefficients {
    pub fn new(c: [f64; 4]) -> Result<Self> {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite("observable coefficients"));
        }
        if norm == 0.0 {
            return Err(Error::ZeroObservable);
        }
        let scale = std::f64::consts::SQRT_2 / norm;
        Ok(Self(c.map(|v| v * scale)))
    }

    /// `p1 - p2`.
    pub fn p_difference() -> Self {
        Self([0.0, 1.0, 0.0, -1.0])
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    /// `|cos|` of the angle to `other`; 1 when parallel or antiparallel.
    pub fn alignment(&self, other: &ObservableCoefficients) -> f64 {
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        (dot / 2.0).abs()
    }
}

/// `(c . D)^2 / (c^T Gamma c)` for raw coefficients; invariant under
/// rescaling of `c`.
pub fn sensitivity_of_raw(c: &[f64; 4], m: &MomentSet) -> Result<f64> {
    let (slope, var) = m.sensitivity_parts(c);
    let scale: f64 = c.iter().map(|v| v * v).sum();
    if !(var > 1e-12 * scale) {
        return Err(Error::DegenerateVariance { variance: var });
    }
    Ok(slope * slope / var)
}

pub fn sensitivity_of(c: &ObservableCoefficients, m: &MomentSet) -> Result<f64> {
    sensitivity_of_raw(&c.0, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalObservable {
    pub c_opt: ObservableCoefficients,
    pub s_opt: f64,
    /// 1-norm condition number of `Gamma`.
    pub condition: f64,
}

/// Maximizes the sensitivity over linear quadrature observables.
///
/// `c_opt = Gamma^{-1} D` satisfies `c_opt . D >= 0`, i.e. the calibration
/// curve rises through the operating point.
pub fn optimize_observable(m: &MomentSet) -> Result<OptimalObservable> {
    let inverse = Inverse4::new(&m.gamma)?;
    let x = inverse.apply(&m.d_vec);
    // Gamma^{-1} is positive definite, so c_opt . D = s_opt >= 0 already
    let s_opt: f64 = x.iter().zip(&m.d_vec).map(|(a, b)| a * b).sum();
    let c_opt = if x.iter().all(|v| *v == 0.0) {
        // D = 0: every observable is blind, keep the conventional one
        ObservableCoefficients::p_difference()
    } else {
        ObservableCoefficients::new(x)?
    };
    Ok(OptimalObservable {
        c_opt,
        s_opt,
        condition: inverse.condition,
    })
}

/// Quantum Fisher information `(2|alpha|^2 + 1) / (1 + |alpha|^2 (1 + cos phi))^2`.
pub fn qfi(spec: &HeraldedStateSpec) -> f64 {
    let a2 = spec.alpha().norm_sqr();
    let k = 1.0 + a2 * (1.0 + spec.phi().cos());
    (2.0 * a2 + 1.0) / (k * k)
}

/// Entanglement `1 / (1 + |alpha|^2 (1 + cos phi))`; see
/// [`crate::fock::partial_transpose_negativity`] for the normalization.
pub fn npt(spec: &HeraldedStateSpec) -> f64 {
    1.0 / (1.0 + spec.alpha().norm_sqr() * (1.0 + spec.phi().cos()))
}

/// Heralds per pump pulse, `g^2 (1 + (1 + cos phi)|alpha|^2)`.
pub fn heralding_rate(spec: &HeraldedStateSpec, g_squared: f64) -> Result<f64> {
    if !(g_squared > 0.0 && g_squared < 1.0) {
        return Err(Error::config("g_squared", "parametric gain must lie in (0, 1)"));
    }
    Ok(g_squared * spec.norm_sq() / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub s_opt: f64,
    pub s_of_c: f64,
    pub qfi: f64,
    pub c_opt: ObservableCoefficients,
}

/// Ideal-state report for the supplied observable, the optimal one and the QFI.
pub fn sensitivity_report(spec: &HeraldedStateSpec, c: &ObservableCoefficients) -> Result<SensitivityReport> {
    let m = assemble(spec);
    let opt = optimize_observable(&m)?;
    Ok(SensitivityReport {
        s_opt: opt.s_opt,
        s_of_c: sensitivity_of(c, &m)?,
        qfi: qfi(spec),
        c_opt: opt.c_opt,
    })
}

/// Gauss-Jordan inverse of a 4x4 matrix with partial pivoting.
struct Inverse4 {
    inv: [[f64; 4]; 4],
    condition: f64,
}

impl Inverse4 {
    fn new(a: &[[f64; 4]; 4]) -> Result<Self> {
        let mut m = *a;
        let mut inv = [[0.0; 4]; 4];
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let scale = norm1(a);
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
                .unwrap();
            if !(m[pivot][col].abs() > f64::EPSILON * scale) {
                return Err(Error::SingularCovariance { condition: f64::INFINITY });
            }
            m.swap(col, pivot);
            inv.swap(col, pivot);
            let p = m[col][col];
            for k in 0..4 {
                m[col][k] /= p;
                inv[col][k] /= p;
            }
            for row in 0..4 {
                if row != col {
                    let f = m[row][col];
                    if f != 0.0 {
                        for k in 0..4 {
                            m[row][k] -= f * m[col][k];
                            inv[row][k] -= f * inv[col][k];
                        }
                    }
                }
            }
        }
        let condition = scale * norm1(&inv);
        if !(condition < MAX_CONDITION) {
            return Err(Error::SingularCovariance { condition });
        }
        Ok(Self { inv, condition })
    }

    fn apply(&self, v: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, row) in out.iter_mut().zip(&self.inv) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }
}

fn norm1(a: &[[f64; 4]; 4]) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
