//! Monotone piecewise-cubic interpolation and tabulated inverse CDFs.

use crate::error::{Error, Result};

/// Fritsch-Carlson monotone cubic Hermite interpolant through `(x_k, y_k)`.
///
/// `x` must be strictly increasing and `y` non-decreasing or non-increasing;
/// the interpolant is then monotone as well.
#[derive(Clone, Debug)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::config("knots", "need at least two knots of matching length"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("knots", "abscissae must be strictly increasing"));
        }
        let secants: Vec<f64> = (0..n - 1)
            .map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            let (a, b) = (secants[k - 1], secants[k]);
            slopes[k] = if a * b <= 0.0 { 0.0 } else { 0.5 * (a + b) };
        }
        for k in 0..n - 1 {
            let d = secants[k];
            if d == 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
                continue;
            }
            let a = slopes[k] / d;
            let b = slopes[k + 1] / d;
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[k] = tau * a * d;
                slopes[k + 1] = tau * b * d;
            }
        }
        Ok(Self { x, y, slopes })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Clamps to the end values outside the knot range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.slopes[k] + h01 * self.y[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

/// Inverse of a CDF tabulated on a grid, interpolated monotonically in
/// probability.
#[derive(Clone, Debug)]
pub struct TabulatedInverseCdf {
    quantile: MonotoneCubic,
}

impl TabulatedInverseCdf {
    /// `cdf` is rescaled to run from 0 to 1 over the grid; knots where it
    /// does not strictly increase (flat tails) are dropped.
    pub fn from_cdf(grid: &[f64], cdf: &[f64]) -> Result<Self> {
        if grid.len() != cdf.len() || grid.len() < 2 {
            return Err(Error::config("grid", "grid and CDF must have equal length >= 2"));
        }
        let lo = cdf[0];
        let span = cdf[cdf.len() - 1] - lo;
        if !(span > 0.0) {
            return Err(Error::config("grid", "CDF carries no mass on the grid"));
        }
        let mut probs = Vec::with_capacity(grid.len());
        let mut xs = Vec::with_capacity(grid.len());
        for (&x, &f) in grid.iter().zip(cdf) {
            let p = ((f - lo) / span).clamp(0.0, 1.0);
            if probs.last().is_some_and(|&last| p <= last) {
                continue;
            }
            probs.push(p);
            xs.push(x);
        }
        Ok(Self {
            quantile: MonotoneCubic::new(probs, xs)?,
        })
    }

    /// Trapezoidal cumulative integral of `pdf` on `grid`.
    pub fn from_pdf(grid: &[f64], pdf: &[f64]) -> Result<Self> {
        if grid.len() != pdf.len() {
            return Err(Error::config("grid", "grid and density must have equal length"));
        }
        let mut cdf = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for k in 1..grid.len() {
            acc += 0.5 * (pdf[k] + pdf[k - 1]) * (grid[k] - grid[k - 1]);
            cdf.push(acc);
        }
        Self::from_cdf(grid, &cdf)
    }

    /// Quantile at probability `u` in `[0, 1]`.
    pub fn sample(&self, u: f64) -> f64 {
        self.quantile.eval(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knots_and_stays_monotone() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 0.7).tanh() + if *v > 3.0 { 1.0 } else { 0.0 }).collect();
        let f = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((f.eval(*a) - b).abs() < 1e-14);
        }
        let mut last = f64::NEG_INFINITY;
        for i in 0..=2000 {
            let v = f.eval(i as f64 * 0.003);
            assert!(v >= last - 1e-15);
            last = v;
        }
    }

    #[test]
    fn exact_on_cubics_through_hermite_data() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v + v).collect();
        let f = MonotoneCubic::new(x, y).unwrap();
        assert!((f.eval(0.511) - (0.511 * 0.511 + 0.511)).abs() < 1e-5);
    }

    #[test]
    fn uniform_quantiles() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let pdf = vec![1.0; 101];
        let inv = TabulatedInverseCdf::from_pdf(&grid, &pdf).unwrap();
        for u in [0.0, 0.1, 0.5, 0.999, 1.0] {
            assert!((inv.sample(u) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
        assert!(TabulatedInverseCdf::from_cdf(&[0.0, 1.0], &[0.5, 0.5]).is_err());
    }
}
