use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on |η| for log and logit arguments.
pub const DEFAULT_SATURATION: f64 = 700.0;

/// Largest |ρ| produced by the correlation link.
pub const RHO_MAX: f64 = 1.0 - 1e-10;

/// Link function g with g(θ) = η.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Log,
    Logit,
    /// ρ / sqrt(1 - ρ²) = η, so ρ = η / sqrt(1 + η²).
    Correlation,
}

impl Link {
    pub fn name(self) -> &'static str {
        match self {
            Link::Identity => "identity",
            Link::Log => "log",
            Link::Logit => "logit",
            Link::Correlation => "rho",
        }
    }

    pub fn forward(self, theta: f64) -> f64 {
        match self {
            Link::Identity => theta,
            Link::Log => theta.ln(),
            Link::Logit => (theta / (1.0 - theta)).ln(),
            Link::Correlation => theta / (1.0 - theta * theta).sqrt(),
        }
    }

    pub fn inverse(self, eta: f64) -> Result<f64> {
        self.inverse_bounded(eta, DEFAULT_SATURATION)
    }

    pub fn inverse_bounded(self, eta: f64, bound: f64) -> Result<f64> {
        if !eta.is_finite() {
            return Err(Error::NonFinitePredictor(eta));
        }
        match self {
            Link::Identity => Ok(eta),
            Link::Log | Link::Logit if eta.abs() > bound => Err(Error::Saturation {
                link: self.name(),
                value: eta,
                bound,
            }),
            Link::Log => Ok(eta.exp()),
            Link::Logit => Ok(logistic(eta)),
            Link::Correlation => {
                let rho = eta / (1.0 + eta * eta).sqrt();
                Ok(rho.clamp(-RHO_MAX, RHO_MAX))
            }
        }
    }

    /// dθ/dη evaluated at θ = inverse(η).
    pub fn derivative(self, theta: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Log => theta,
            Link::Logit => theta * (1.0 - theta),
            Link::Correlation => {
                let s = 1.0 - theta * theta;
                s * s.sqrt()
            }
        }
    }
}

/// Numerically stable inverse logit.
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}
