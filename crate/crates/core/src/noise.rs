//! Preparation and detection imperfections.
//!
//! The heralded state is replaced by the mixture
//! `eta_p |Psi><Psi| + (1 - eta_p)|alpha, alpha><alpha, alpha|` and each mode
//! then passes a beam splitter of transmission `eta_d`. The closed forms
//! below cover the observable `X = p1 - p2` for real `alpha`; everything
//! else under loss is computed through [`crate::fock`].

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{apply_mixture_and_loss, FockCutoff, Mode, Operator};
use crate::moments::{MomentSet, QUADRATURES};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPair {
    eta_p: f64,
    eta_d: f64,
}

impl EfficiencyPair {
    pub const IDEAL: EfficiencyPair = EfficiencyPair { eta_p: 1.0, eta_d: 1.0 };

    pub fn new(eta_p: f64, eta_d: f64) -> Result<Self> {
        for (name, value) in [("eta_p", eta_p), ("eta_d", eta_d)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::EfficiencyOutOfRange { name, value });
            }
        }
        Ok(Self { eta_p, eta_d })
    }

    pub fn eta_p(&self) -> f64 {
        self.eta_p
    }

    pub fn eta_d(&self) -> f64 {
        self.eta_d
    }
}

impl Default for EfficiencyPair {
    fn default() -> Self {
        Self::IDEAL
    }
}

/// Seed-dependent preparation efficiency `eta_p_sp / (coeff * alpha^2 + 1)`.
///
/// The defaults are the measured single-photon efficiency and the fitted
/// visibility coefficient of the reference setup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEtaP {
    pub eta_p_sp: f64,
    pub visibility_coeff: f64,
}

impl Default for EmpiricalEtaP {
    fn default() -> Self {
        Self {
            eta_p_sp: 0.92,
            visibility_coeff: 0.0052,
        }
    }
}

impl EmpiricalEtaP {
    pub fn eta_p(&self, alpha: f64) -> f64 {
        eta_p_of_alpha(self, alpha)
    }
}

pub fn eta_p_of_alpha(model: &EmpiricalEtaP, alpha: f64) -> f64 {
    model.eta_p_sp / (model.visibility_coeff * alpha * alpha + 1.0)
}

fn denominator(alpha: f64, phi: f64) -> f64 {
    1.0 + (1.0 + phi.cos()) * alpha * alpha
}

/// `<p1 - p2>` under preparation and detection losses.
pub fn lossy_mean_x(alpha: f64, phi: f64, eff: EfficiencyPair) -> f64 {
    -alpha * eff.eta_p * eff.eta_d.sqrt() * phi.sin() / denominator(alpha, phi)
}

/// `d/dphi` of [`lossy_mean_x`].
pub fn lossy_mean_x_slope(alpha: f64, phi: f64, eff: EfficiencyPair) -> f64 {
    let a2 = alpha * alpha;
    let k = denominator(alpha, phi);
    let (s, c) = phi.sin_cos();
    -alpha * eff.eta_p * eff.eta_d.sqrt() * (c * k + a2 * s * s) / (k * k)
}

/// `Var(p1 - p2)` under preparation and detection losses.
pub fn lossy_var_x(alpha: f64, phi: f64, eff: EfficiencyPair) -> f64 {
    let a2 = alpha * alpha;
    let k = denominator(alpha, phi);
    let dp = eff.eta_d * eff.eta_p;
    let (s, c) = phi.sin_cos();
    (c * (a2 - dp) + a2 + dp + 1.0) / (2.0 * k) - a2 * eff.eta_d * eff.eta_p * eff.eta_p * s * s / (k * k)
}

/// Sensitivity of `p1 - p2` at `phi = pi`: `2 alpha^2 eta_d eta_p^2 / (1 + 2 eta_d eta_p)`.
pub fn lossy_sensitivity(alpha: f64, eff: EfficiencyPair) -> f64 {
    let dp = eff.eta_d * eff.eta_p;
    2.0 * alpha * alpha * dp * eff.eta_p / (1.0 + 2.0 * dp)
}

/// Full moment set of the lossy state, from the Fock-space channel.
///
/// `D` is a central difference of the means with step `1e-5`.
pub fn lossy_moments(
    alpha: Complex64,
    phi: f64,
    eff: EfficiencyPair,
    cutoff: FockCutoff,
) -> Result<MomentSet> {
    let quads: Vec<Operator> = QUADRATURES
        .iter()
        .map(|&(mode, theta)| Operator::quadrature(mode, theta))
        .collect();
    let means = |phi: f64| -> Result<[f64; 4]> {
        let dm = apply_mixture_and_loss(alpha, phi, eff, cutoff)?;
        let mut m = [0.0; 4];
        for (slot, q) in m.iter_mut().zip(&quads) {
            *slot = dm.expectation(q)?.re;
        }
        Ok(m)
    };
    let dm = apply_mixture_and_loss(alpha, phi, eff, cutoff)?;
    let mut mean = [0.0; 4];
    for (slot, q) in mean.iter_mut().zip(&quads) {
        *slot = dm.expectation(q)?.re;
    }
    let mut gamma = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let second = dm.expectation(&(&quads[i] * &quads[j]))?.re;
            let g = second - mean[i] * mean[j];
            gamma[i][j] = g;
            gamma[j][i] = g;
        }
    }
    let h = 1e-5;
    let plus = means(phi + h)?;
    let minus = means(phi - h)?;
    let mut d_vec = [0.0; 4];
    for i in 0..4 {
        d_vec[i] = (plus[i] - minus[i]) / (2.0 * h);
    }
    Ok(MomentSet { mean, gamma, d_vec })
}

/// The measured observable `p1 - p2`.
pub fn p_difference() -> Operator {
    Operator::quadrature(Mode::One, FRAC_PI_2) - Operator::quadrature(Mode::Two, FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn empirical_eta_p() {
        let m = EmpiricalEtaP::default();
        assert_eq!(m.eta_p(0.0), 0.92);
        assert!((m.eta_p(1.13) - 0.913_93).abs() < 1e-4);
        assert!((m.eta_p(7.92) - 0.6937).abs() < 1e-3);
        let mut last = m.eta_p(0.0);
        for i in 1..50 {
            let v = m.eta_p(i as f64 * 0.2);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn mean_limits() {
        let eff = EfficiencyPair::new(0.9, 0.59).unwrap();
        assert!(lossy_mean_x(2.0, PI, eff).abs() < 1e-15);
        assert!((lossy_mean_x(1.0, FRAC_PI_2, EfficiencyPair::IDEAL) + 0.5).abs() < 1e-15);
        assert!((lossy_mean_x(1.0, FRAC_PI_2, eff) + 0.5 * 0.9 * 0.59f64.sqrt()).abs() < 1e-15);
        assert!((lossy_mean_x(1.0, FRAC_PI_2, eff) + 0.3457).abs() < 1e-4);
    }

    #[test]
    fn slope_matches_difference_quotient() {
        let eff = EfficiencyPair::new(0.9139, 0.59).unwrap();
        let h = 1e-6;
        for phi in [2.0, PI - 0.2, PI, 4.0] {
            let fd = (lossy_mean_x(1.13, phi + h, eff) - lossy_mean_x(1.13, phi - h, eff)) / (2.0 * h);
            assert!((fd - lossy_mean_x_slope(1.13, phi, eff)).abs() < 1e-8);
        }
        assert!((lossy_mean_x_slope(1.13, PI, eff) - 0.59f64.sqrt() * 0.9139 * 1.13).abs() < 1e-12);
    }

    #[test]
    fn variance_at_pi() {
        for (ep, ed) in [(0.9139, 0.59), (0.7, 0.4), (1.0, 1.0)] {
            let eff = EfficiencyPair::new(ep, ed).unwrap();
            for a in [0.0, 1.0, 3.4] {
                assert!((lossy_var_x(a, PI, eff) - (0.5 + ep * ed)).abs() < 1e-12);
            }
        }
        assert!((lossy_var_x(1.0, PI, EfficiencyPair::IDEAL) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn sensitivity_values() {
        let eff = EfficiencyPair::new(0.9139, 0.59).unwrap();
        assert!((lossy_sensitivity(1.13, eff) - 0.606).abs() < 1e-3);
        for a in [0.5, 1.13, 3.4] {
            assert!((lossy_sensitivity(a, EfficiencyPair::IDEAL) - 2.0 * a * a / 3.0).abs() < 1e-12);
        }
        assert_eq!(lossy_sensitivity(2.0, EfficiencyPair::new(0.8, 0.0).unwrap()), 0.0);
    }

    #[test]
    fn sensitivity_equals_slope_over_variance() {
        let eff = EfficiencyPair::new(0.85, 0.6).unwrap();
        let s = lossy_mean_x_slope(2.0, PI, eff).powi(2) / lossy_var_x(2.0, PI, eff);
        assert!((s - lossy_sensitivity(2.0, eff)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_efficiency() {
        assert!(EfficiencyPair::new(1.2, 0.5).is_err());
        assert!(EfficiencyPair::new(0.5, -0.1).is_err());
    }
}
