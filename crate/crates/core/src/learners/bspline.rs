//! Equidistant B-spline bases (Eilers–Marx construction).

use serde::{Deserialize, Serialize};

use super::design::BandedDesign;
use crate::error::{Error, Result};

/// B-spline basis over `[lo, hi]` with `n_knots` equidistant knots (boundaries
/// included) and `degree` extra knots continued past each boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineBasis {
    pub lo: f64,
    pub hi: f64,
    pub n_knots: usize,
    pub degree: usize,
}

impl BSplineBasis {
    pub fn new(lo: f64, hi: f64, n_knots: usize, degree: usize) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::DegenerateRange { min: lo, max: hi });
        }
        if n_knots < 2 || degree < 1 {
            return Err(Error::LearnerConfig(format!(
                "B-spline basis needs n_knots >= 2 and degree >= 1 (got {n_knots}, {degree})"
            )));
        }
        Ok(Self {
            lo,
            hi,
            n_knots,
            degree,
        })
    }

    pub fn from_data(x: &[f64], n_knots: usize, degree: usize) -> Result<Self> {
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LearnerConfig("non-finite covariate value".into()));
        }
        Self::new(lo, hi, n_knots, degree)
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.n_knots + self.degree - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n_knots - 1) as f64
    }

    /// Full knot vector, including the extended boundary knots.
    pub fn knots(&self) -> Vec<f64> {
        let h = self.spacing();
        let total = self.n_knots + 2 * self.degree;
        (0..total)
            .map(|j| self.lo + (j as f64 - self.degree as f64) * h)
            .collect()
    }

    fn knot(&self, j: usize) -> f64 {
        self.lo + (j as f64 - self.degree as f64) * self.spacing()
    }

    /// Knot-span index μ with t_μ ≤ x < t_{μ+1}; x = hi maps to the last interior span.
    fn span(&self, x: f64) -> usize {
        let last = self.degree + self.n_knots - 2;
        let rel = ((x - self.lo) / self.spacing()).floor();
        let idx = if rel < 0.0 { 0 } else { rel as usize };
        (idx + self.degree).min(last)
    }

    /// Non-zero basis functions of degree `d` on span μ (Cox–de Boor triangle).
    fn nonzero(&self, x: f64, mu: usize, d: usize) -> Vec<f64> {
        let mut n = vec![0.0; d + 1];
        let mut left = vec![0.0; d + 1];
        let mut right = vec![0.0; d + 1];
        n[0] = 1.0;
        for j in 1..=d {
            left[j] = x - self.knot(mu + 1 - j);
            right[j] = self.knot(mu + j) - x;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            n[j] = saved;
        }
        n
    }

    /// Returns (first column, degree + 1 values) for a point inside `[lo, hi]`.
    pub fn eval(&self, x: f64) -> (usize, Vec<f64>) {
        let mu = self.span(x);
        (mu - self.degree, self.nonzero(x, mu, self.degree))
    }

    /// First derivatives of the same degree + 1 basis functions as [`eval`](Self::eval).
    pub fn eval_derivative(&self, x: f64) -> (usize, Vec<f64>) {
        let d = self.degree;
        let mu = self.span(x);
        let lower = self.nonzero(x, mu, d - 1);
        let h = self.spacing();
        // N'_{i,d} = (N_{i,d-1} − N_{i+1,d-1}) / h on an equidistant grid
        let deriv = (0..=d)
            .map(|r| {
                let a = if r >= 1 { lower[r - 1] } else { 0.0 };
                let b = if r < d { lower[r] } else { 0.0 };
                (a - b) / h
            })
            .collect();
        (mu - d, deriv)
    }

    /// Basis row for any x; outside `[lo, hi]` the basis is continued linearly
    /// from the nearest boundary. The flag reports extrapolation.
    pub fn row(&self, x: f64) -> (usize, Vec<f64>, bool) {
        if x < self.lo || x > self.hi {
            let edge = if x < self.lo { self.lo } else { self.hi };
            let (s, mut vals) = self.eval(edge);
            let (_, deriv) = self.eval_derivative(edge);
            for (v, dv) in vals.iter_mut().zip(deriv) {
                *v += (x - edge) * dv;
            }
            (s, vals, true)
        } else {
            let (s, vals) = self.eval(x);
            (s, vals, false)
        }
    }

    /// Design matrix for `x` and the number of extrapolated points.
    pub fn design(&self, x: &[f64]) -> (BandedDesign, usize) {
        let width = self.degree + 1;
        let mut start = Vec::with_capacity(x.len());
        let mut values = Vec::with_capacity(x.len() * width);
        let mut outside = 0;
        for &xi in x {
            let (s, vals, extrapolated) = self.row(xi);
            outside += extrapolated as usize;
            start.push(s);
            values.extend(vals);
        }
        (BandedDesign::new(self.len(), width, start, values), outside)
    }
}
