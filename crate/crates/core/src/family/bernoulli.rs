//! Bivariate Bernoulli (Dale / Plackett) model parameterised by marginal
//! probabilities and the odds ratio ψ = (p00·p11)/(p01·p10).

use serde::{Deserialize, Serialize};

use super::links::logistic;
use crate::error::{Error, Result};

/// Cells below this value are clamped before taking logs.
pub const CELL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateBinaryParams {
    pub p1: f64,
    pub p2: f64,
    pub psi: f64,
}

impl BivariateBinaryParams {
    pub fn new(p1: f64, p2: f64, psi: f64) -> Result<Self> {
        let ok = p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0 && psi > 0.0 && psi.is_finite();
        if !ok {
            return Err(Error::Domain(format!(
                "bivariate binary parameters out of range: p1={p1}, p2={p2}, psi={psi}"
            )));
        }
        Ok(Self { p1, p2, psi })
    }
}

/// Joint cell probabilities p_ij = P(Y1 = i, Y2 = j).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProbabilities {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    /// Set when at least one cell fell below [`CELL_FLOOR`] and the table was renormalised.
    pub clamped: bool,
}

impl CellProbabilities {
    pub fn cell(&self, y1: u8, y2: u8) -> f64 {
        match (y1, y2) {
            (0, 0) => self.p00,
            (0, 1) => self.p01,
            (1, 0) => self.p10,
            _ => self.p11,
        }
    }

    pub fn odds_ratio(&self) -> f64 {
        (self.p00 * self.p11) / (self.p01 * self.p10)
    }
}

/// Unclamped p11 from the Dale formula.
///
/// The textbook form ½(ψ−1)⁻¹{a − √(a²+b)} cancels catastrophically near ψ = 1.
/// Multiplying through by the conjugate gives 2ψ·p1·p2 / (a + √(a²+b)), which is
/// exact at ψ = 1 and well conditioned whenever a ≥ 0. For a < 0 (only possible
/// when ψ < 1 - 1/(p1+p2)) the original form has no cancellation.
pub fn joint_success(p1: f64, p2: f64, psi: f64) -> f64 {
    let s = psi - 1.0;
    let a = 1.0 + (p1 + p2) * s;
    let b = -4.0 * psi * s * p1 * p2;
    let r = (a * a + b).max(0.0).sqrt();
    let p11 = if a >= 0.0 {
        (2.0 * psi * p1 * p2) / (a + r)
    } else {
        (a - r) / (2.0 * s)
    };
    let lo = (p1 + p2 - 1.0).max(0.0);
    p11.clamp(lo, p1.min(p2))
}

pub fn cell_probs(params: &BivariateBinaryParams) -> CellProbabilities {
    let BivariateBinaryParams { p1, p2, psi } = *params;
    let p11 = joint_success(p1, p2, psi);
    let mut cells = [1.0 - p1 - p2 + p11, p2 - p11, p1 - p11, p11];
    let mut clamped = false;
    if cells.iter().any(|&c| c < CELL_FLOOR) {
        clamped = true;
        for c in cells.iter_mut() {
            *c = c.max(CELL_FLOOR);
        }
        let total: f64 = cells.iter().sum();
        for c in cells.iter_mut() {
            *c /= total;
        }
    }
    CellProbabilities {
        p00: cells[0],
        p01: cells[1],
        p10: cells[2],
        p11: cells[3],
        clamped,
    }
}

pub(crate) fn check_outcome(y: [f64; 2]) -> Result<(u8, u8)> {
    let bit = |v: f64| {
        if v == 0.0 {
            Ok(0u8)
        } else if v == 1.0 {
            Ok(1u8)
        } else {
            Err(Error::Domain(format!("binary response must be 0 or 1, got {v}")))
        }
    };
    Ok((bit(y[0])?, bit(y[1])?))
}

pub fn logpmf(y: [f64; 2], params: &BivariateBinaryParams) -> Result<f64> {
    let (y1, y2) = check_outcome(y)?;
    Ok(cell_probs(params).cell(y1, y2).ln())
}

/// Partial derivatives of p11 with respect to (p1, p2, ψ).
///
/// Obtained by implicit differentiation of p11·p00 − ψ·p10·p01 = 0; algebraically
/// identical to differentiating the closed-form Dale root, but free of the
/// (ψ−1)⁻² factor.
pub fn joint_success_partials(p1: f64, p2: f64, psi: f64) -> [f64; 3] {
    let p11 = joint_success(p1, p2, psi);
    let p10 = p1 - p11;
    let p01 = p2 - p11;
    let p00 = 1.0 - p1 - p2 + p11;
    let denom = p00 + p11 + psi * (p01 + p10);
    [
        (p11 + psi * p01) / denom,
        (p11 + psi * p10) / denom,
        (p10 * p01) / denom,
    ]
}

pub fn params_from_eta(eta: &[f64]) -> BivariateBinaryParams {
    BivariateBinaryParams {
        p1: logistic(eta[0]),
        p2: logistic(eta[1]),
        psi: eta[2].exp(),
    }
}

/// Gradient of log p(y) with respect to (η_p1, η_p2, η_ψ).
pub fn grad(y: [f64; 2], eta: &[f64], out: &mut [f64]) -> Result<()> {
    let (y1, y2) = check_outcome(y)?;
    let params = params_from_eta(eta);
    let BivariateBinaryParams { p1, p2, psi } = params;
    let cells = cell_probs(&params);
    let [d1, d2, dpsi] = joint_success_partials(p1, p2, psi);
    // chain rule through the links
    let dp1 = p1 * (1.0 - p1);
    let dp2 = p2 * (1.0 - p2);
    let dp11 = [d1 * dp1, d2 * dp2, dpsi * psi];
    let dmarg1 = [dp1, 0.0, 0.0];
    let dmarg2 = [0.0, dp2, 0.0];
    let cell = cells.cell(y1, y2);
    for k in 0..3 {
        let dcell = match (y1, y2) {
            (1, 1) => dp11[k],
            (1, 0) => dmarg1[k] - dp11[k],
            (0, 1) => dmarg2[k] - dp11[k],
            _ => dp11[k] - dmarg1[k] - dmarg2[k],
        };
        out[k] = dcell / cell;
    }
    Ok(())
}
