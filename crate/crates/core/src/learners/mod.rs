//! Base-learners: linear, P-spline and Markov random field effects, each fitted
//! to a working response by penalized least squares at a fixed effective
//! degrees of freedom.

pub mod bspline;
pub mod design;
pub mod mrf;
pub mod penalty;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

pub use bspline::BSplineBasis;
pub use design::BandedDesign;
pub use mrf::Adjacency;
pub use penalty::{calibrate_lambda, difference_penalty, hat_trace, PenalizedSystem};

use crate::data::Covariates;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PSplineConfig {
    pub n_knots: usize,
    pub degree: usize,
    pub diff_order: usize,
    pub df: f64,
}

impl Default for PSplineConfig {
    fn default() -> Self {
        Self {
            n_knots: 20,
            degree: 3,
            diff_order: 2,
            df: 4.0,
        }
    }
}

impl PSplineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::LearnerConfig("P-spline degree must be >= 1".into()));
        }
        if self.n_knots < self.diff_order + 1 || self.n_knots < 2 {
            return Err(Error::LearnerConfig(format!(
                "P-spline needs n_knots >= diff_order + 1 (got {} knots, order {})",
                self.n_knots, self.diff_order
            )));
        }
        if !(self.df > 0.0) {
            return Err(Error::LearnerConfig(format!("df must be positive, got {}", self.df)));
        }
        Ok(())
    }
}

pub const DEFAULT_MRF_DF: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrfConfig {
    pub adjacency: Adjacency,
    pub df: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LearnerKind {
    Linear,
    Pspline(PSplineConfig),
    Mrf(MrfConfig),
}

/// One candidate effect of a covariate on one additive predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseLearnerSpec {
    pub covariate: String,
    #[serde(flatten)]
    pub kind: LearnerKind,
}

impl BaseLearnerSpec {
    pub fn linear(covariate: impl Into<String>) -> Self {
        Self {
            covariate: covariate.into(),
            kind: LearnerKind::Linear,
        }
    }

    pub fn pspline(covariate: impl Into<String>) -> Self {
        Self::pspline_with(covariate, PSplineConfig::default())
    }

    pub fn pspline_with(covariate: impl Into<String>, config: PSplineConfig) -> Self {
        Self {
            covariate: covariate.into(),
            kind: LearnerKind::Pspline(config),
        }
    }

    pub fn mrf(covariate: impl Into<String>, adjacency: Adjacency, df: f64) -> Self {
        Self {
            covariate: covariate.into(),
            kind: LearnerKind::Mrf(MrfConfig { adjacency, df }),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            LearnerKind::Linear => "linear",
            LearnerKind::Pspline(_) => "pspline",
            LearnerKind::Mrf(_) => "mrf",
        }
    }

    /// Display label such as `pspline(x1)`.
    pub fn label(&self) -> String {
        format!("{}({})", self.kind_name(), self.covariate)
    }
}

impl fmt::Display for BaseLearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Design, penalty and calibrated smoothing parameter of one learner.
#[derive(Debug, Clone)]
pub struct PenaltySetup {
    pub design: BandedDesign,
    pub penalty: Array2<f64>,
    pub lambda: f64,
    pub system: PenalizedSystem,
}

impl PenaltySetup {
    /// Calibrates λ so that the hat-matrix trace equals `df`; `None` leaves the learner unpenalized.
    pub fn new(design: BandedDesign, penalty: Array2<f64>, df: Option<f64>) -> Result<Self> {
        let system = PenalizedSystem::new(&design.gram(), &penalty);
        let lambda = match df {
            Some(df) => penalty::calibrate(&system, df)?,
            None => 0.0,
        };
        Ok(Self {
            design,
            penalty,
            lambda,
            system,
        })
    }

    pub fn df(&self) -> f64 {
        self.system.df(self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rss: f64,
}

/// Training-time state a learner needs to rebuild its design on new data:
/// the centring constant, the knot grid or the region order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FrozenBasis {
    Linear { center: f64, min: f64, max: f64 },
    Pspline(BSplineBasis),
    Mrf { regions: Vec<String> },
}

impl FrozenBasis {
    pub fn n_coefficients(&self) -> usize {
        match self {
            FrozenBasis::Linear { .. } => 2,
            FrozenBasis::Pspline(b) => b.len(),
            FrozenBasis::Mrf { regions } => regions.len(),
        }
    }

    /// Design matrix for new data and the number of points outside the training range.
    pub fn design(&self, covariate: &str, data: &Covariates) -> Result<(BandedDesign, usize)> {
        match self {
            FrozenBasis::Linear { center, .. } => {
                let x = data.numeric(covariate)?;
                Ok((linear_design(x, *center), 0))
            }
            FrozenBasis::Pspline(basis) => Ok(basis.design(data.numeric(covariate)?)),
            FrozenBasis::Mrf { regions } => {
                let index: HashMap<&str, usize> =
                    regions.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
                let labels = data.categorical(covariate)?;
                let mut start = Vec::with_capacity(labels.len());
                let mut unknown: Vec<String> = Vec::new();
                for l in labels {
                    match index.get(l.as_str()) {
                        Some(&i) => start.push(i),
                        None if !unknown.contains(l) => unknown.push(l.clone()),
                        None => {}
                    }
                }
                if !unknown.is_empty() {
                    return Err(Error::UnknownRegion(unknown));
                }
                let n = start.len();
                Ok((BandedDesign::new(regions.len(), 1, start, vec![1.0; n]), 0))
            }
        }
    }
}

fn linear_design(x: &[f64], center: f64) -> BandedDesign {
    let values = x.iter().flat_map(|&v| [1.0, v - center]).collect();
    BandedDesign::new(2, 2, vec![0; x.len()], values)
}

/// Linear learner: design [1, x − mean(x)], unpenalized.
pub fn linear_setup(x: &[f64]) -> (PenaltySetup, FrozenBasis) {
    let n = x.len().max(1) as f64;
    let center = x.iter().sum::<f64>() / n;
    let (min, max) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let setup = PenaltySetup::new(linear_design(x, center), Array2::zeros((2, 2)), None)
        .expect("unpenalized setup needs no calibration");
    (setup, FrozenBasis::Linear { center, min, max })
}

pub fn pspline_setup(x: &[f64], config: &PSplineConfig) -> Result<(PenaltySetup, FrozenBasis)> {
    config.validate()?;
    let basis = BSplineBasis::from_data(x, config.n_knots, config.degree)?;
    let (design, _) = basis.design(x);
    if basis.len() <= config.diff_order {
        return Err(Error::LearnerConfig("P-spline basis smaller than penalty order".into()));
    }
    let penalty = difference_penalty(config.diff_order, basis.len());
    let setup = PenaltySetup::new(design, penalty, Some(config.df))?;
    Ok((setup, FrozenBasis::Pspline(basis)))
}

/// Region-indicator design with a graph-Laplacian penalty.
pub fn mrf_setup<S: AsRef<str>>(regions: &[S], adjacency: &Adjacency, target_df: f64) -> Result<(PenaltySetup, FrozenBasis)> {
    let design = adjacency.indicator_design(regions)?;
    let components = adjacency.n_components();
    if components > 1 {
        log::warn!(
            "MRF neighbourhood graph has {components} connected components; the unpenalized dimension rises accordingly"
        );
    }
    let setup = PenaltySetup::new(design, adjacency.laplacian(), Some(target_df))?;
    Ok((
        setup,
        FrozenBasis::Mrf {
            regions: adjacency.labels().to_vec(),
        },
    ))
}

/// A learner bound to training data, ready to fit working responses.
#[derive(Debug, Clone)]
pub struct PreparedLearner {
    pub spec: BaseLearnerSpec,
    pub basis: FrozenBasis,
    pub setup: PenaltySetup,
    solver: Array2<f64>,
    /// ZᵀZ when small enough that quadratic forms beat a pass over the rows.
    gram: Option<Array2<f64>>,
    ridge_fallback: bool,
}

impl PreparedLearner {
    pub fn prepare(spec: &BaseLearnerSpec, data: &Covariates) -> Result<Self> {
        let (setup, basis) = match &spec.kind {
            LearnerKind::Linear => linear_setup(data.numeric(&spec.covariate)?),
            LearnerKind::Pspline(cfg) => pspline_setup(data.numeric(&spec.covariate)?, cfg)?,
            LearnerKind::Mrf(cfg) => {
                if !(cfg.df > 0.0) {
                    return Err(Error::LearnerConfig(format!("MRF df must be positive, got {}", cfg.df)));
                }
                mrf_setup(data.categorical(&spec.covariate)?, &cfg.adjacency, cfg.df)?
            }
        };
        Ok(Self::from_setup(spec.clone(), basis, setup))
    }

    pub fn from_setup(spec: BaseLearnerSpec, basis: FrozenBasis, setup: PenaltySetup) -> Self {
        let solver = setup.system.inverse(setup.lambda);
        let ridge_fallback = setup.system.ridge() > 0.0;
        if ridge_fallback {
            log::warn!("{}: singular normal equations, using ridge fallback", spec.label());
        }
        let q = setup.design.ncols();
        let gram = (q * q <= 4 * setup.design.nrows()).then(|| setup.design.gram());
        Self {
            spec,
            basis,
            setup,
            solver,
            gram,
            ridge_fallback,
        }
    }

    pub fn used_ridge_fallback(&self) -> bool {
        self.ridge_fallback
    }

    pub fn n_coefficients(&self) -> usize {
        self.setup.design.ncols()
    }

    fn solve(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ztu = self.setup.design.transpose_times(u);
        let coefficients = self.solver.rows().into_iter().map(|r| r.iter().zip(&ztu).map(|(a, b)| a * b).sum()).collect();
        (coefficients, ztu)
    }

    /// Solves (ZᵀZ + λK) β = Zᵀu.
    pub fn fit(&self, u: &[f64]) -> FitResult {
        let (coefficients, _) = self.solve(u);
        let fitted = self.setup.design.times(&coefficients);
        let rss = u.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
        FitResult {
            coefficients,
            fitted,
            rss,
        }
    }

    /// Coefficients and rss without materializing the fitted values; `uu` is uᵀu.
    pub(crate) fn fit_rss(&self, u: &[f64], uu: f64) -> (Vec<f64>, f64) {
        let (beta, ztu) = self.solve(u);
        let rss = match &self.gram {
            Some(g) => {
                let quad: f64 = g
                    .rows()
                    .into_iter()
                    .zip(&beta)
                    .map(|(r, b)| b * r.iter().zip(&beta).map(|(x, y)| x * y).sum::<f64>())
                    .sum();
                let cross: f64 = beta.iter().zip(&ztu).map(|(a, b)| a * b).sum();
                (uu - 2.0 * cross + quad).max(0.0)
            }
            None => {
                let fitted = self.setup.design.times(&beta);
                u.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum()
            }
        };
        (beta, rss)
    }
}
