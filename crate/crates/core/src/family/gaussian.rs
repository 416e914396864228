use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::links::RHO_MAX;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateGaussianParams {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl BivariateGaussianParams {
    pub fn new(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64, rho: f64) -> Result<Self> {
        let ok = mu1.is_finite()
            && mu2.is_finite()
            && sigma1 > 0.0
            && sigma2 > 0.0
            && sigma1.is_finite()
            && sigma2.is_finite()
            && rho > -1.0
            && rho < 1.0;
        if !ok {
            return Err(Error::Domain(format!(
                "bivariate Gaussian parameters out of range: mu=({mu1}, {mu2}), sigma=({sigma1}, {sigma2}), rho={rho}"
            )));
        }
        Ok(Self {
            mu1,
            mu2,
            sigma1,
            sigma2,
            rho,
        })
    }
}

pub(crate) fn check_reals(y: [f64; 2]) -> Result<()> {
    if y[0].is_finite() && y[1].is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite response ({}, {})", y[0], y[1])))
    }
}

pub fn logpdf(y: [f64; 2], params: &BivariateGaussianParams) -> Result<f64> {
    check_reals(y)?;
    let BivariateGaussianParams {
        mu1,
        mu2,
        sigma1,
        sigma2,
        rho,
    } = *params;
    let z1 = (y[0] - mu1) / sigma1;
    let z2 = (y[1] - mu2) / sigma2;
    let one_minus = 1.0 - rho * rho;
    let q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / one_minus;
    Ok(-(2.0 * PI).ln() - (sigma1.ln() + sigma2.ln() + 0.5 * one_minus.ln()) - 0.5 * q)
}

pub fn params_from_eta(eta: &[f64]) -> BivariateGaussianParams {
    let rho = (eta[4] / (1.0 + eta[4] * eta[4]).sqrt()).clamp(-RHO_MAX, RHO_MAX);
    BivariateGaussianParams {
        mu1: eta[0],
        mu2: eta[1],
        sigma1: eta[2].exp(),
        sigma2: eta[3].exp(),
        rho,
    }
}

/// Gradient with respect to (η_μ1, η_μ2, η_σ1, η_σ2, η_ρ).
///
/// With z the standardised residuals and s = 1 − ρ²:
/// ∂/∂μ1 = (z1 − ρ z2)/(σ1 s), ∂/∂η_σ1 = z1 (z1 − ρ z2)/s − 1,
/// ∂/∂η_ρ = √s (ρ + z1 z2) − ρ q / √s where q = z1² − 2ρ z1 z2 + z2².
pub fn grad(y: [f64; 2], eta: &[f64], out: &mut [f64]) -> Result<()> {
    check_reals(y)?;
    let p = params_from_eta(eta);
    let z1 = (y[0] - p.mu1) / p.sigma1;
    let z2 = (y[1] - p.mu2) / p.sigma2;
    let rho = p.rho;
    let s = 1.0 - rho * rho;
    let a1 = z1 - rho * z2;
    let a2 = z2 - rho * z1;
    out[0] = a1 / (p.sigma1 * s);
    out[1] = a2 / (p.sigma2 * s);
    out[2] = z1 * a1 / s - 1.0;
    out[3] = z2 * a2 / s - 1.0;
    let q = z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2;
    let root = s.sqrt();
    out[4] = if rho.abs() >= RHO_MAX {
        // link is flat once ρ is capped
        0.0
    } else {
        root * (rho + z1 * z2) - rho * q / root
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn univariate(y: f64, mu: f64, sigma: f64) -> f64 {
        let z = (y - mu) / sigma;
        -0.5 * (2.0 * PI).ln() - sigma.ln() - 0.5 * z * z
    }

    #[test]
    fn density_at_mean() {
        let p = BivariateGaussianParams::new(1.0, -2.0, 1.0, 1.0, 0.0).unwrap();
        assert!((logpdf([1.0, -2.0], &p).unwrap() + (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn independence_factorises() {
        let p = BivariateGaussianParams::new(0.3, 1.2, 0.8, 2.5, 0.0).unwrap();
        for y in [[0.0, 0.0], [1.7, -3.2], [-4.0, 9.0]] {
            let joint = logpdf(y, &p).unwrap();
            let sum = univariate(y[0], 0.3, 0.8) + univariate(y[1], 1.2, 2.5);
            assert!((joint - sum).abs() < 1e-13);
        }
    }

    #[test]
    fn stationary_at_mean() {
        let mut g = [0.0; 5];
        grad([0.5, -1.0], &[0.5, -1.0, 0.2, -0.4, 0.7], &mut g).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn correlation_gradient_sign() {
        let mut g = [0.0; 5];
        grad([1.0, 1.0], &[0.0, 0.0, 0.0, 0.0, 0.0], &mut g).unwrap();
        assert!(g[4] > 0.0);
        assert!((g[4] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rho_zero_scores_are_univariate() {
        let mut g = [0.0; 5];
        let (y1, mu1, ls1) = (2.3, 0.4, 0.3f64);
        grad([y1, -0.7], &[mu1, 1.1, ls1, -0.2, 0.0], &mut g).unwrap();
        let sigma = ls1.exp();
        let z = (y1 - mu1) / sigma;
        assert_eq!(g[0], z / sigma);
        assert_eq!(g[2], z * z - 1.0);
    }
}
