//! Bivariate Poisson via trivariate reduction: Y1 = Z1 + Z3, Y2 = Z2 + Z3.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariatePoissonParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl BivariatePoissonParams {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda2 > 0.0 && lambda3 >= 0.0)
            || !(lambda1.is_finite() && lambda2.is_finite() && lambda3.is_finite())
        {
            return Err(Error::Domain(format!(
                "bivariate Poisson rates out of range: ({lambda1}, {lambda2}, {lambda3})"
            )));
        }
        Ok(Self {
            lambda1,
            lambda2,
            lambda3,
        })
    }

    pub fn means(&self) -> [f64; 2] {
        [self.lambda1 + self.lambda3, self.lambda2 + self.lambda3]
    }
}

pub(crate) fn check_counts(y: [f64; 2]) -> Result<(u64, u64)> {
    let count = |v: f64| {
        if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
            Ok(v as u64)
        } else {
            Err(Error::Domain(format!(
                "count response must be a non-negative integer, got {v}"
            )))
        }
    };
    Ok((count(y[0])?, count(y[1])?))
}

/// log Σ_k C(y1,k) C(y2,k) k! r^k and the weighted mean of k under those terms.
///
/// Terms follow the ratio recurrence t_{k+1}/t_k = (y1−k)(y2−k) r / (k+1) in
/// linear space, rescaled before they can overflow.
fn shared_component_sum(y1: u64, y2: u64, log_r: f64) -> (f64, f64) {
    let kmax = y1.min(y2);
    if kmax == 0 || log_r == f64::NEG_INFINITY {
        return (0.0, 0.0);
    }
    if log_r > 300.0 {
        return shared_component_sum_log(y1, y2, log_r);
    }
    let r = log_r.exp();
    let mut shift = 0.0f64;
    let mut t = 1.0f64;
    let mut sum = 1.0f64;
    let mut ksum = 0.0f64;
    for k in 0..kmax {
        let kf = k as f64;
        let ratio = ((y1 - k) as f64) * ((y2 - k) as f64) * r / (kf + 1.0);
        if t * ratio > 1e280 {
            shift += t.ln();
            sum /= t;
            ksum /= t;
            t = 1.0;
        }
        t *= ratio;
        sum += t;
        ksum += (kf + 1.0) * t;
    }
    (shift + sum.ln(), ksum / sum)
}

/// Log-domain version of [`shared_component_sum`] for extreme ratios.
fn shared_component_sum_log(y1: u64, y2: u64, log_r: f64) -> (f64, f64) {
    let kmax = y1.min(y2);
    let mut log_t = 0.0f64;
    // running log Σ t and Σ k t, both relative to `shift`
    let mut shift = 0.0f64;
    let mut sum = 1.0f64;
    let mut ksum = 0.0f64;
    for k in 0..kmax {
        let kf = k as f64;
        log_t += (((y1 - k) as f64) * ((y2 - k) as f64) / (kf + 1.0)).ln() + log_r;
        if log_t > shift {
            let scale = (shift - log_t).exp();
            sum *= scale;
            ksum *= scale;
            shift = log_t;
        }
        let w = (log_t - shift).exp();
        sum += w;
        ksum += (kf + 1.0) * w;
    }
    (shift + sum.ln(), ksum / sum)
}

fn log_r(params: &BivariatePoissonParams) -> f64 {
    if params.lambda3 == 0.0 {
        f64::NEG_INFINITY
    } else {
        params.lambda3.ln() - params.lambda1.ln() - params.lambda2.ln()
    }
}

pub fn logpmf(y: [f64; 2], params: &BivariatePoissonParams) -> Result<f64> {
    let (y1, y2) = check_counts(y)?;
    let BivariatePoissonParams {
        lambda1,
        lambda2,
        lambda3,
    } = *params;
    let (log_sum, _) = shared_component_sum(y1, y2, log_r(params));
    let (f1, f2) = (y1 as f64, y2 as f64);
    Ok(-(lambda1 + lambda2 + lambda3) + xlogy(f1, lambda1) - ln_gamma(f1 + 1.0)
        + xlogy(f2, lambda2)
        - ln_gamma(f2 + 1.0)
        + log_sum)
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

pub fn params_from_eta(eta: &[f64]) -> BivariatePoissonParams {
    BivariatePoissonParams {
        lambda1: eta[0].exp(),
        lambda2: eta[1].exp(),
        lambda3: eta[2].exp(),
    }
}

/// Gradient of log p(y) with respect to (η_λ1, η_λ2, η_λ3) under log links.
///
/// With E[k] the mean of k under the shared-component weights,
/// ∂ℓ/∂η1 = y1 − λ1 − E[k], ∂ℓ/∂η2 = y2 − λ2 − E[k], ∂ℓ/∂η3 = E[k] − λ3.
pub fn grad(y: [f64; 2], eta: &[f64], out: &mut [f64]) -> Result<()> {
    let (y1, y2) = check_counts(y)?;
    let params = params_from_eta(eta);
    let (_, mean_k) = shared_component_sum(y1, y2, log_r(&params));
    out[0] = y1 as f64 - params.lambda1 - mean_k;
    out[1] = y2 as f64 - params.lambda2 - mean_k;
    out[2] = mean_k - params.lambda3;
    Ok(())
}
