//! Bivariate response families.
//!
//! Each family exposes K distribution parameters, a link per parameter, a joint
//! log-density, and the gradient of that log-density with respect to the
//! additive predictors η (not the parameters themselves; the link derivative is
//! applied inside each family).
//!
//! Parameter order is fixed:
//!
//! | family       | parameters              | links                              |
//! |--------------|-------------------------|------------------------------------|
//! | `bernoulli2` | p1, p2, ψ               | logit, logit, log                  |
//! | `poisson2`   | λ1, λ2, λ3              | log, log, log                      |
//! | `gaussian2`  | μ1, μ2, σ1, σ2, ρ       | identity ×2, log ×2, ρ/√(1−ρ²)     |

pub mod bernoulli;
pub mod gaussian;
pub mod links;
pub mod poisson;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use bernoulli::{cell_probs, BivariateBinaryParams, CellProbabilities};
pub use gaussian::BivariateGaussianParams;
pub use links::{Link, DEFAULT_SATURATION};
pub use poisson::BivariatePoissonParams;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bernoulli2,
    Poisson2,
    Gaussian2,
}

/// Parameters of one observation's bivariate distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Params {
    Binary(BivariateBinaryParams),
    Poisson(BivariatePoissonParams),
    Gaussian(BivariateGaussianParams),
}

impl Params {
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            Params::Binary(p) => vec![p.p1, p.p2, p.psi],
            Params::Poisson(p) => vec![p.lambda1, p.lambda2, p.lambda3],
            Params::Gaussian(p) => vec![p.mu1, p.mu2, p.sigma1, p.sigma2, p.rho],
        }
    }

    /// Marginal means E(Y1), E(Y2).
    pub fn means(&self) -> [f64; 2] {
        match *self {
            Params::Binary(p) => [p.p1, p.p2],
            Params::Poisson(p) => p.means(),
            Params::Gaussian(p) => [p.mu1, p.mu2],
        }
    }
}

const BERNOULLI_LINKS: [Link; 3] = [Link::Logit, Link::Logit, Link::Log];
const POISSON_LINKS: [Link; 3] = [Link::Log, Link::Log, Link::Log];
const GAUSSIAN_LINKS: [Link; 5] = [
    Link::Identity,
    Link::Identity,
    Link::Log,
    Link::Log,
    Link::Correlation,
];

/// Predictor value used for λ3 when the Poisson association is switched off.
pub const POISSON_INDEPENDENCE_ETA: f64 = -25.0;

impl Family {
    pub const ALL: [Family; 3] = [Family::Bernoulli2, Family::Poisson2, Family::Gaussian2];

    pub fn id(self) -> &'static str {
        match self {
            Family::Bernoulli2 => "bernoulli2",
            Family::Poisson2 => "poisson2",
            Family::Gaussian2 => "gaussian2",
        }
    }

    pub fn n_params(self) -> usize {
        self.links().len()
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Family::Bernoulli2 => &["p1", "p2", "psi"],
            Family::Poisson2 => &["lambda1", "lambda2", "lambda3"],
            Family::Gaussian2 => &["mu1", "mu2", "sigma1", "sigma2", "rho"],
        }
    }

    pub fn parameter_index(self, name: &str) -> Option<usize> {
        self.parameter_names().iter().position(|&p| p == name)
    }

    pub fn links(self) -> &'static [Link] {
        match self {
            Family::Bernoulli2 => &BERNOULLI_LINKS,
            Family::Poisson2 => &POISSON_LINKS,
            Family::Gaussian2 => &GAUSSIAN_LINKS,
        }
    }

    /// Index of the association parameter (ψ, λ3, ρ).
    pub fn association_index(self) -> usize {
        self.n_params() - 1
    }

    /// Predictor value of the association parameter that makes Y1 and Y2 independent.
    pub fn independence_eta(self) -> f64 {
        match self {
            Family::Bernoulli2 | Family::Gaussian2 => 0.0,
            // λ3 = 0 is the boundary; a negligible rate stands in for it
            Family::Poisson2 => POISSON_INDEPENDENCE_ETA,
        }
    }

    pub fn inverse_link(self, eta: &[f64]) -> Result<Params> {
        self.inverse_link_bounded(eta, DEFAULT_SATURATION)
    }

    pub fn inverse_link_bounded(self, eta: &[f64], bound: f64) -> Result<Params> {
        self.check_eta_len(eta)?;
        let mut theta = [0.0; 5];
        for (k, link) in self.links().iter().enumerate() {
            theta[k] = link.inverse_bounded(eta[k], bound)?;
        }
        self.params_from_theta(&theta[..self.n_params()])
    }

    /// Builds validated parameters from values on the parameter scale, in family order.
    pub fn params_from_theta(self, theta: &[f64]) -> Result<Params> {
        self.check_eta_len(theta)?;
        Ok(match self {
            Family::Bernoulli2 => Params::Binary(BivariateBinaryParams::new(theta[0], theta[1], theta[2])?),
            Family::Poisson2 => Params::Poisson(BivariatePoissonParams::new(theta[0], theta[1], theta[2])?),
            Family::Gaussian2 => Params::Gaussian(BivariateGaussianParams::new(
                theta[0], theta[1], theta[2], theta[3], theta[4],
            )?),
        })
    }

    pub fn link(self, params: &Params) -> Vec<f64> {
        params
            .to_vec()
            .into_iter()
            .zip(self.links())
            .map(|(theta, link)| link.forward(theta))
            .collect()
    }

    fn check_eta_len(self, eta: &[f64]) -> Result<()> {
        if eta.len() != self.n_params() {
            return Err(Error::Schema(format!(
                "{} expects {} predictors, got {}",
                self.id(),
                self.n_params(),
                eta.len()
            )));
        }
        Ok(())
    }

    /// Checks that a response pair is in the family's support.
    pub fn validate_response(self, y: [f64; 2]) -> Result<()> {
        match self {
            Family::Bernoulli2 => bernoulli::check_outcome(y).map(|_| ()),
            Family::Poisson2 => poisson::check_counts(y).map(|_| ()),
            Family::Gaussian2 => gaussian::check_reals(y),
        }
    }

    pub fn log_density(self, y: [f64; 2], params: &Params) -> Result<f64> {
        match (self, params) {
            (Family::Bernoulli2, Params::Binary(p)) => bernoulli::logpmf(y, p),
            (Family::Poisson2, Params::Poisson(p)) => poisson::logpmf(y, p),
            (Family::Gaussian2, Params::Gaussian(p)) => gaussian::logpdf(y, p),
            _ => Err(Error::Schema(format!(
                "parameters do not belong to family {}",
                self.id()
            ))),
        }
    }

    /// Log-density as a function of the predictors.
    pub fn log_density_eta(self, y: [f64; 2], eta: &[f64]) -> Result<f64> {
        let params = self.inverse_link(eta)?;
        self.log_density(y, &params)
    }

    /// Writes ∂ log p(y) / ∂η_k for every k into `out`.
    pub fn gradient(self, y: [f64; 2], eta: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_eta_len(eta)?;
        for (k, link) in self.links().iter().enumerate() {
            link.inverse(eta[k])?;
        }
        match self {
            Family::Bernoulli2 => bernoulli::grad(y, eta, out),
            Family::Poisson2 => poisson::grad(y, eta, out),
            Family::Gaussian2 => gaussian::grad(y, eta, out),
        }
    }

    /// Negative log-likelihood Σ_i −log p(y_i | η_i); this is the boosting risk.
    pub fn negloglik(self, responses: ArrayView2<f64>, eta: ArrayView2<f64>) -> Result<f64> {
        if responses.nrows() != eta.nrows() {
            return Err(Error::Schema(format!(
                "{} response rows vs {} predictor rows",
                responses.nrows(),
                eta.nrows()
            )));
        }
        let mut total = 0.0;
        let mut buf = [0.0; 5];
        let k = self.n_params();
        for (i, (y, e)) in responses.outer_iter().zip(eta.outer_iter()).enumerate() {
            let e = row_slice(e, &mut buf[..k]);
            total -= self
                .log_density_eta([y[0], y[1]], e)
                .map_err(|err| err.at_row(i))?;
        }
        Ok(total)
    }

    /// Number of rows whose Bernoulli cell table needed clamping.
    pub fn clamped_rows(self, eta: ArrayView2<f64>) -> usize {
        if self != Family::Bernoulli2 {
            return 0;
        }
        eta.outer_iter()
            .filter(|e| cell_probs(&bernoulli::params_from_eta(&[e[0], e[1], e[2]])).clamped)
            .count()
    }
}

pub(crate) fn row_slice<'a>(row: ArrayView1<'a, f64>, buf: &'a mut [f64]) -> &'a [f64] {
    for (b, v) in buf.iter_mut().zip(row.iter()) {
        *b = *v;
    }
    buf
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown family '{s}' (expected bernoulli2, poisson2 or gaussian2)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn parameter_counts() {
        assert_eq!(Family::Bernoulli2.n_params(), 3);
        assert_eq!(Family::Poisson2.n_params(), 3);
        assert_eq!(Family::Gaussian2.n_params(), 5);
        for f in Family::ALL {
            assert_eq!(f.parameter_names().len(), f.n_params());
        }
    }

    #[test]
    fn inverse_link_examples() {
        let p = Family::Gaussian2.inverse_link(&[0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.to_vec()[4], 0.0);
        let p = Family::Bernoulli2.inverse_link(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.to_vec()[0], 0.5);
        let p = Family::Poisson2
            .inverse_link(&[2f64.ln(), 3f64.ln(), 1f64.ln()])
            .unwrap()
            .to_vec();
        for (got, want) in p.iter().zip([2.0, 3.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(Family::Poisson2.inverse_link(&[800.0, 0.0, 0.0]).is_err());
        assert!(Family::Poisson2.inverse_link(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn negloglik_additivity() {
        let y = array![[1.0, 0.0], [0.0, 0.0], [1.0, 1.0]];
        let eta = array![[0.2, -0.1, 0.5], [1.0, 0.3, -0.2], [-0.4, 0.0, 1.5]];
        let single = Family::Bernoulli2
            .negloglik(y.slice(ndarray::s![0..1, ..]), eta.slice(ndarray::s![0..1, ..]))
            .unwrap();
        let direct = -Family::Bernoulli2.log_density_eta([1.0, 0.0], &[0.2, -0.1, 0.5]).unwrap();
        assert_eq!(single, direct);

        let total = Family::Bernoulli2.negloglik(y.view(), eta.view()).unwrap();
        let y2 = ndarray::concatenate![ndarray::Axis(0), y, y];
        let eta2 = ndarray::concatenate![ndarray::Axis(0), eta, eta];
        let doubled = Family::Bernoulli2.negloglik(y2.view(), eta2.view()).unwrap();
        assert!((doubled - 2.0 * total).abs() < 1e-12);
    }

    #[test]
    fn negloglik_reports_row() {
        let y = array![[1.0, 0.0], [2.0, 0.0]];
        let eta = array![[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        match Family::Bernoulli2.negloglik(y.view(), eta.view()) {
            Err(Error::Row { row, .. }) => assert_eq!(row, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_family() {
        assert_eq!("poisson2".parse::<Family>().unwrap(), Family::Poisson2);
        assert!("probit2".parse::<Family>().is_err());
    }
}
