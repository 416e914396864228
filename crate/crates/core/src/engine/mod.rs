//! Non-cyclic component-wise gradient boosting for bivariate distributional regression.

mod booster;
mod model;
mod offsets;

pub use booster::{fit, fit_with_observer, Booster, HistoryEntry, StepDiagnostics};
pub use model::{selection_frequencies, Effect, EffectEntry, FittedModel, ParameterEffects, Prediction, SelectionCount};
pub use offsets::{init_offsets, moment_start};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::learners::BaseLearnerSpec;

pub const DEFAULT_NU: f64 = 0.1;
pub const DEFAULT_M_MAX: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetMode {
    #[default]
    Mle,
    Zero,
}

/// Optional rescaling of each negative-gradient column before base-learners are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stabilization {
    #[default]
    None,
    /// Divide by the median absolute deviation.
    Mad,
    /// Divide by the root mean square.
    L2,
}

impl Stabilization {
    /// Divisor for one gradient column; 1 when the column is degenerate.
    pub fn scale(self, u: &[f64]) -> f64 {
        let s = match self {
            Stabilization::None => return 1.0,
            Stabilization::L2 => (u.iter().map(|v| v * v).sum::<f64>() / u.len().max(1) as f64).sqrt(),
            Stabilization::Mad => {
                let median = |v: &mut Vec<f64>| {
                    v.sort_by(f64::total_cmp);
                    let m = v.len() / 2;
                    if v.len() % 2 == 1 {
                        v[m]
                    } else {
                        0.5 * (v[m - 1] + v[m])
                    }
                };
                if u.is_empty() {
                    return 1.0;
                }
                let med = median(&mut u.to_vec());
                median(&mut u.iter().map(|v| (v - med).abs()).collect())
            }
        };
        if s.is_finite() && s > 1e-10 {
            s
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    /// Candidate learners for each distribution parameter, in family parameter order.
    pub learners: Vec<Vec<BaseLearnerSpec>>,
    /// Parameters pinned to a fixed predictor value instead of an estimated offset.
    #[serde(default)]
    pub fixed: Vec<Option<f64>>,
    pub nu: f64,
    pub m_max: usize,
    #[serde(default)]
    pub offsets: OffsetMode,
    #[serde(default)]
    pub stabilization: Stabilization,
    #[serde(default)]
    pub stop_on_no_improvement: bool,
}

impl ModelSpec {
    /// Spec with no learners; every parameter stays at its offset until learners are added.
    pub fn new(family: Family) -> Self {
        let k = family.n_params();
        Self {
            family,
            learners: vec![Vec::new(); k],
            fixed: vec![None; k],
            nu: DEFAULT_NU,
            m_max: DEFAULT_M_MAX,
            offsets: OffsetMode::Mle,
            stabilization: Stabilization::None,
            stop_on_no_improvement: false,
        }
    }

    /// The same learners for every parameter.
    pub fn with_all(family: Family, learners: Vec<BaseLearnerSpec>) -> Self {
        let mut spec = Self::new(family);
        for list in &mut spec.learners {
            *list = learners.clone();
        }
        spec
    }

    pub fn set_learners(&mut self, parameter: usize, learners: Vec<BaseLearnerSpec>) {
        self.learners[parameter] = learners;
    }

    /// Pins the association parameter at independence and removes its learners.
    pub fn independence(mut self) -> Self {
        let a = self.family.association_index();
        self.learners[a].clear();
        self.fixed[a] = Some(self.family.independence_eta());
        self
    }

    pub fn fixed_value(&self, parameter: usize) -> Option<f64> {
        self.fixed.get(parameter).copied().flatten()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.family.n_params();
        if self.learners.len() != k {
            return Err(Error::Spec(format!(
                "{} has {k} parameters, got learner lists for {}",
                self.family,
                self.learners.len()
            )));
        }
        if !self.fixed.is_empty() && self.fixed.len() != k {
            return Err(Error::Spec(format!("fixed values given for {} of {k} parameters", self.fixed.len())));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::Spec(format!("step length nu must lie in (0, 1], got {}", self.nu)));
        }
        for (p, fixed) in self.fixed.iter().enumerate() {
            if let Some(v) = fixed {
                if !v.is_finite() {
                    return Err(Error::Spec(format!("fixed value for {} is not finite", self.family.parameter_names()[p])));
                }
                if !self.learners[p].is_empty() {
                    return Err(Error::Spec(format!(
                        "parameter {} is fixed but has learners",
                        self.family.parameter_names()[p]
                    )));
                }
            }
        }
        Ok(())
    }
}
