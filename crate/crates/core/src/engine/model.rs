use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::booster::HistoryEntry;
use super::ModelSpec;
use crate::data::{Column, Covariates};
use crate::error::Result;
use crate::learners::{BSplineBasis, BaseLearnerSpec, FrozenBasis};

/// A learner's frozen basis and its summed coefficients at m*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub spec: BaseLearnerSpec,
    pub basis: FrozenBasis,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub offsets: Vec<f64>,
    /// Per parameter, per learner, in spec order.
    pub learners: Vec<Vec<LearnerState>>,
    pub m_star: usize,
    pub iterations_run: usize,
    pub history: Vec<HistoryEntry>,
    /// Risk after 0, 1, ..., iterations_run updates.
    pub train_risk: Vec<f64>,
    #[serde(with = "crate::io::nonfinite", default)]
    pub validation_risk: Option<Vec<f64>>,
    /// Response column names of the training file, when fitted from one.
    #[serde(default)]
    pub response_names: Option<[String; 2]>,
    /// Training predictors at m*, kept only in memory.
    #[serde(skip)]
    pub train_eta: Option<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// n×K additive predictors.
    pub eta: Array2<f64>,
    /// n×K distribution parameters.
    pub params: Array2<f64>,
    /// n×2 marginal means.
    pub means: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Effect {
    /// Total slope; the centring intercept is folded into the parameter intercept.
    Linear { slope: f64 },
    Pspline { basis: BSplineBasis, coefficients: Vec<f64> },
    Mrf { regions: Vec<(String, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectEntry {
    pub covariate: String,
    pub learner: String,
    pub effect: Effect,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterEffects {
    pub parameter: String,
    pub intercept: f64,
    pub effects: Vec<EffectEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectionCount {
    pub parameter: usize,
    pub parameter_name: String,
    pub learner: usize,
    pub label: String,
    pub count: usize,
}

/// Number of times each (parameter, learner) pair was chosen.
pub fn selection_frequencies(history: &[HistoryEntry]) -> BTreeMap<(usize, usize), usize> {
    let mut counts = BTreeMap::new();
    for h in history {
        *counts.entry((h.parameter, h.learner)).or_insert(0) += 1;
    }
    counts
}

impl FittedModel {
    pub fn n_params(&self) -> usize {
        self.spec.family.n_params()
    }

    /// History up to the selected stopping iteration.
    pub fn selected_history(&self) -> &[HistoryEntry] {
        &self.history[..self.m_star.min(self.history.len())]
    }

    pub fn is_selected(&self, parameter: usize, learner: usize) -> bool {
        self.selected_history()
            .iter()
            .any(|h| h.parameter == parameter && h.learner == learner)
    }

    /// Labelled selection counts up to m*.
    pub fn selection_table(&self) -> Vec<SelectionCount> {
        let names = self.spec.family.parameter_names();
        selection_frequencies(self.selected_history())
            .into_iter()
            .map(|((p, j), count)| SelectionCount {
                parameter: p,
                parameter_name: names[p].to_string(),
                learner: j,
                label: self.learners[p][j].spec.label(),
                count,
            })
            .collect()
    }

    /// Covariates any selected learner needs.
    pub fn required_covariates(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for (p, list) in self.learners.iter().enumerate() {
            for (j, l) in list.iter().enumerate() {
                if self.is_selected(p, j) && !out.contains(&l.spec.covariate) {
                    out.push(l.spec.covariate.clone());
                }
            }
        }
        out
    }

    pub fn predict_eta(&self, data: &Covariates) -> Result<Array2<f64>> {
        let n = data.nrows();
        let mut eta = Array2::from_shape_fn((n, self.n_params()), |(_, k)| self.offsets[k]);
        for (p, list) in self.learners.iter().enumerate() {
            for (j, l) in list.iter().enumerate() {
                if !self.is_selected(p, j) {
                    continue;
                }
                let (design, outside) = l.basis.design(&l.spec.covariate, data)?;
                if outside > 0 {
                    log::warn!(
                        "{} in {}: {outside} rows outside the training range",
                        l.spec.label(),
                        self.spec.family.parameter_names()[p]
                    );
                }
                let contribution = design.times(&l.coefficients);
                for (i, c) in contribution.iter().enumerate() {
                    eta[[i, p]] += c;
                }
            }
        }
        Ok(eta)
    }

    pub fn predict(&self, data: &Covariates) -> Result<Prediction> {
        let eta = self.predict_eta(data)?;
        let family = self.spec.family;
        let n = eta.nrows();
        let k = self.n_params();
        let mut params = Array2::zeros((n, k));
        let mut means = Array2::zeros((n, 2));
        for i in 0..n {
            let row: Vec<f64> = eta.row(i).to_vec();
            let theta = family.inverse_link(&row).map_err(|e| e.at_row(i))?;
            for (c, v) in theta.to_vec().into_iter().enumerate() {
                params[[i, c]] = v;
            }
            let m = theta.means();
            means[[i, 0]] = m[0];
            means[[i, 1]] = m[1];
        }
        Ok(Prediction { eta, params, means })
    }

    /// Aggregated effects of the selected learners; never-selected ones are absent.
    pub fn coefficients(&self) -> Vec<ParameterEffects> {
        let names = self.spec.family.parameter_names();
        let mut out = Vec::with_capacity(self.n_params());
        for (p, list) in self.learners.iter().enumerate() {
            let mut intercept = self.offsets[p];
            let mut effects: Vec<EffectEntry> = Vec::new();
            for (j, l) in list.iter().enumerate() {
                if !self.is_selected(p, j) {
                    continue;
                }
                let label = l.spec.label();
                let existing = effects.iter().position(|e| e.learner == label);
                match &l.basis {
                    FrozenBasis::Linear { center, .. } => {
                        let (a, b) = (l.coefficients[0], l.coefficients[1]);
                        intercept += a - b * center;
                        match existing {
                            Some(e) => {
                                if let Effect::Linear { slope } = &mut effects[e].effect {
                                    *slope += b;
                                }
                            }
                            None => effects.push(EffectEntry {
                                covariate: l.spec.covariate.clone(),
                                learner: label,
                                effect: Effect::Linear { slope: b },
                            }),
                        }
                    }
                    FrozenBasis::Pspline(basis) => match existing {
                        Some(e) => {
                            if let Effect::Pspline { coefficients, .. } = &mut effects[e].effect {
                                for (c, v) in coefficients.iter_mut().zip(&l.coefficients) {
                                    *c += v;
                                }
                            }
                        }
                        None => effects.push(EffectEntry {
                            covariate: l.spec.covariate.clone(),
                            learner: label,
                            effect: Effect::Pspline {
                                basis: basis.clone(),
                                coefficients: l.coefficients.clone(),
                            },
                        }),
                    },
                    FrozenBasis::Mrf { regions } => match existing {
                        Some(e) => {
                            if let Effect::Mrf { regions: vals } = &mut effects[e].effect {
                                for ((_, c), v) in vals.iter_mut().zip(&l.coefficients) {
                                    *c += v;
                                }
                            }
                        }
                        None => effects.push(EffectEntry {
                            covariate: l.spec.covariate.clone(),
                            learner: label,
                            effect: Effect::Mrf {
                                regions: regions.iter().cloned().zip(l.coefficients.iter().copied()).collect(),
                            },
                        }),
                    },
                }
            }
            out.push(ParameterEffects {
                parameter: names[p].to_string(),
                intercept,
                effects,
            });
        }
        out
    }

    /// Total linear slope of `covariate` in predictor `parameter`, if selected.
    pub fn slope(&self, parameter: usize, covariate: &str) -> Option<f64> {
        self.coefficients()[parameter]
            .effects
            .iter()
            .find_map(|e| match e.effect {
                Effect::Linear { slope } if e.covariate == covariate => Some(slope),
                _ => None,
            })
    }

    /// Partial effect of learner `j` of `parameter` on an evaluation grid:
    /// `points` equidistant values over the training range, or every region.
    /// Linear effects exclude the intercept folded into the offset.
    /// Never-selected learners give zeros.
    pub fn effect_grid(&self, parameter: usize, learner: usize, points: usize) -> Result<Vec<(String, f64)>> {
        let l = &self.learners[parameter][learner];
        let selected = self.is_selected(parameter, learner);
        let grid = |lo: f64, hi: f64| -> Vec<f64> {
            let m = points.max(2);
            (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
        };
        let rows: Vec<(String, f64)> = match &l.basis {
            FrozenBasis::Linear { min, max, .. } => grid(*min, *max)
                .into_iter()
                .map(|x| (x.to_string(), if selected { l.coefficients[1] * x } else { 0.0 }))
                .collect(),
            FrozenBasis::Pspline(basis) => {
                let xs = grid(basis.lo, basis.hi);
                let mut cov = Covariates::new();
                cov.push(l.spec.covariate.clone(), Column::Numeric(xs.clone()))?;
                let (design, _) = l.basis.design(&l.spec.covariate, &cov)?;
                let vals = if selected {
                    design.times(&l.coefficients)
                } else {
                    vec![0.0; xs.len()]
                };
                xs.into_iter().map(|x| x.to_string()).zip(vals).collect()
            }
            FrozenBasis::Mrf { regions } => regions
                .iter()
                .cloned()
                .zip(l.coefficients.iter().map(|&c| if selected { c } else { 0.0 }))
                .collect(),
        };
        Ok(rows)
    }
}
