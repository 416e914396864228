use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{FittedModel, LearnerState};
use super::offsets::{init_offsets, offset_matrix};
use super::ModelSpec;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{row_slice, Family};
use crate::learners::{BandedDesign, PreparedLearner};

/// One boosting iteration as kept in the model history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub parameter: usize,
    pub learner: usize,
    /// In-sample risk after the update.
    pub risk: f64,
    /// ν-scaled coefficients added to the chosen learner.
    #[serde(skip)]
    pub step: Vec<f64>,
}

/// Everything the selection compared at one iteration.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub iteration: usize,
    /// Candidate risk per parameter; infinite for frozen parameters or failed updates.
    pub candidate_risks: Vec<f64>,
    /// Within-parameter winner per parameter.
    pub best_learner: Vec<Option<usize>>,
    /// Residual sum of squares of every learner, per parameter.
    pub rss: Vec<Vec<f64>>,
    pub chosen_parameter: usize,
    pub chosen_learner: usize,
    pub risk_before: f64,
}

struct Validation {
    responses: Array2<f64>,
    designs: Vec<Vec<BandedDesign>>,
    eta: Array2<f64>,
}

/// Mutable boosting state over one training sample.
pub struct Booster {
    spec: ModelSpec,
    responses: Array2<f64>,
    learners: Vec<Vec<PreparedLearner>>,
    offsets: Vec<f64>,
    eta: Array2<f64>,
    u: Array2<f64>,
    coefficients: Vec<Vec<Vec<f64>>>,
    risk: f64,
    history: Vec<HistoryEntry>,
    train_risk: Vec<f64>,
    validation: Option<Validation>,
    validation_risk: Vec<f64>,
    stopped: bool,
}

fn prepare_all(spec: &ModelSpec, train: &Dataset) -> Result<Vec<Vec<PreparedLearner>>> {
    let mut cache: Vec<PreparedLearner> = Vec::new();
    let mut out = Vec::with_capacity(spec.learners.len());
    for list in &spec.learners {
        let mut prepared = Vec::with_capacity(list.len());
        for ls in list {
            let learner = match cache.iter().find(|p| &p.spec == ls) {
                Some(p) => p.clone(),
                None => {
                    let p = PreparedLearner::prepare(ls, &train.covariates)
                        .map_err(|e| Error::Spec(format!("{}: {e}", ls.label())))?;
                    cache.push(p.clone());
                    p
                }
            };
            prepared.push(learner);
        }
        out.push(prepared);
    }
    Ok(out)
}

/// Risk with column `k` replaced by `eta_k + nu * fitted`; infinite when any row fails.
fn candidate_risk(family: Family, y: &Array2<f64>, eta: &Array2<f64>, k: usize, fitted: &[f64], nu: f64) -> f64 {
    let np = family.n_params();
    let mut buf = [0.0; 5];
    let mut total = 0.0;
    for (i, (yr, er)) in y.outer_iter().zip(eta.outer_iter()).enumerate() {
        let e = row_slice(er, &mut buf[..np]);
        let mut row = [0.0; 5];
        row[..np].copy_from_slice(e);
        row[k] += nu * fitted[i];
        match family.log_density_eta([yr[0], yr[1]], &row[..np]) {
            Ok(l) => total -= l,
            Err(_) => return f64::INFINITY,
        }
    }
    if total.is_finite() {
        total
    } else {
        f64::INFINITY
    }
}

impl Booster {
    pub fn new(spec: &ModelSpec, train: &Dataset, validation: Option<&Dataset>) -> Result<Self> {
        spec.validate()?;
        let family = spec.family;
        train.validate_for(family)?;
        let learners = prepare_all(spec, train)?;
        let n = train.nrows();
        let k = family.n_params();
        let offsets = init_offsets(family, train.responses.view(), spec.offsets, &spec.fixed)?;
        let eta = offset_matrix(&offsets, n);
        let risk = family.negloglik(train.responses.view(), eta.view())?;
        if !risk.is_finite() {
            return Err(Error::NonFiniteRisk { iteration: 0 });
        }
        let validation = match validation {
            Some(v) => {
                v.validate_for(family)?;
                let mut designs = Vec::with_capacity(k);
                // learners shared between parameters are evaluated (and reported) once
                let mut cache: Vec<(&PreparedLearner, BandedDesign)> = Vec::new();
                for list in &learners {
                    let mut ds = Vec::with_capacity(list.len());
                    for l in list {
                        if let Some((_, d)) = cache.iter().find(|(c, _)| c.spec == l.spec) {
                            ds.push(d.clone());
                            continue;
                        }
                        let (d, outside) = l.basis.design(&l.spec.covariate, &v.covariates)?;
                        if outside > 0 {
                            log::warn!("{}: {outside} validation rows outside the training range", l.spec.label());
                        }
                        cache.push((l, d.clone()));
                        ds.push(d);
                    }
                    designs.push(ds);
                }
                Some(Validation {
                    responses: v.responses.clone(),
                    designs,
                    eta: offset_matrix(&offsets, v.nrows()),
                })
            }
            None => None,
        };
        let coefficients = learners
            .iter()
            .map(|list| list.iter().map(|l| vec![0.0; l.n_coefficients()]).collect())
            .collect();
        let mut booster = Self {
            spec: spec.clone(),
            responses: train.responses.clone(),
            learners,
            offsets,
            eta,
            u: Array2::zeros((n, k)),
            coefficients,
            risk,
            history: Vec::new(),
            train_risk: vec![risk],
            validation,
            validation_risk: Vec::new(),
            stopped: false,
        };
        if let Some(r) = booster.current_validation_risk() {
            booster.validation_risk.push(r);
        }
        Ok(booster)
    }

    fn current_validation_risk(&self) -> Option<f64> {
        self.validation.as_ref().map(|v| {
            self.spec
                .family
                .negloglik(v.responses.view(), v.eta.view())
                .ok()
                .filter(|r| r.is_finite())
                .unwrap_or(f64::INFINITY)
        })
    }

    pub fn eta(&self) -> &Array2<f64> {
        &self.eta
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn risk(&self) -> f64 {
        self.risk
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn learners(&self) -> &[Vec<PreparedLearner>] {
        &self.learners
    }

    /// Negative gradient of the risk, i.e. the per-row score, for every predictor.
    fn compute_gradient(&mut self) -> Result<()> {
        let family = self.spec.family;
        let np = family.n_params();
        let y = &self.responses;
        let eta = &self.eta;
        let rows: Vec<[f64; 5]> = (0..y.nrows())
            .into_par_iter()
            .map(|i| {
                let mut buf = [0.0; 5];
                let e = row_slice(eta.row(i), &mut buf[..np]);
                let mut g = [0.0; 5];
                family
                    .gradient([y[[i, 0]], y[[i, 1]]], e, &mut g[..np])
                    .map_err(|err| err.at_row(i))?;
                Ok(g)
            })
            .collect::<Result<_>>()?;
        for (mut out, g) in self.u.outer_iter_mut().zip(rows) {
            for (o, v) in out.iter_mut().zip(&g[..np]) {
                *o = *v;
            }
        }
        Ok(())
    }

    /// One iteration. Returns `None` when no parameter can be updated
    /// (all frozen) or the no-improvement stop triggered.
    pub fn step(&mut self) -> Result<Option<StepDiagnostics>> {
        if self.stopped || self.learners.iter().all(|l| l.is_empty()) {
            return Ok(None);
        }
        let family = self.spec.family;
        let nu = self.spec.nu;
        let iteration = self.history.len() + 1;
        self.compute_gradient()?;

        let k = family.n_params();
        let stab = self.spec.stabilization;
        let columns: Vec<Vec<f64>> = (0..k)
            .map(|p| {
                let mut u = self.u.column(p).to_vec();
                let s = stab.scale(&u);
                if s != 1.0 {
                    u.iter_mut().for_each(|v| *v /= s);
                }
                u
            })
            .collect();
        // fit every learner of every parameter to its gradient column
        let fits: Vec<Vec<(Vec<f64>, f64)>> = self
            .learners
            .par_iter()
            .zip(columns.par_iter())
            .map(|(list, u)| {
                let uu: f64 = u.iter().map(|v| v * v).sum();
                list.par_iter().map(|l| l.fit_rss(u, uu)).collect()
            })
            .collect();
        let best: Vec<Option<usize>> = fits
            .iter()
            .map(|list| {
                let mut best: Option<usize> = None;
                for (j, (_, rss)) in list.iter().enumerate() {
                    // strict comparison keeps the lowest index on ties
                    if rss.is_finite() && best.is_none_or(|b| *rss < list[b].1) {
                        best = Some(j);
                    }
                }
                best
            })
            .collect();
        let fitted: Vec<Option<Vec<f64>>> = (0..k)
            .map(|p| best[p].map(|j| self.learners[p][j].setup.design.times(&fits[p][j].0)))
            .collect();
        let candidate_risks: Vec<f64> = (0..k)
            .into_par_iter()
            .map(|p| match &fitted[p] {
                Some(f) => candidate_risk(family, &self.responses, &self.eta, p, f, nu),
                None => f64::INFINITY,
            })
            .collect();
        let mut chosen: Option<usize> = None;
        for p in 0..k {
            if candidate_risks[p].is_finite() && chosen.is_none_or(|c| candidate_risks[p] < candidate_risks[c]) {
                chosen = Some(p);
            }
        }
        let Some(kstar) = chosen else {
            return Err(Error::NonFiniteRisk { iteration });
        };
        if self.spec.stop_on_no_improvement && candidate_risks[kstar] > self.risk {
            log::info!("no candidate reduces the risk at iteration {iteration}; stopping");
            self.stopped = true;
            return Ok(None);
        }
        let jstar = best[kstar].expect("chosen parameter has a learner");
        for (i, f) in fitted[kstar].as_ref().expect("chosen parameter was fitted").iter().enumerate() {
            self.eta[[i, kstar]] += nu * f;
        }
        let step: Vec<f64> = fits[kstar][jstar].0.iter().map(|c| nu * c).collect();
        for (acc, s) in self.coefficients[kstar][jstar].iter_mut().zip(&step) {
            *acc += s;
        }
        let risk_before = self.risk;
        self.risk = candidate_risks[kstar];
        self.train_risk.push(self.risk);
        if let Some(v) = self.validation.as_mut() {
            let contribution = v.designs[kstar][jstar].times(&step);
            for (i, c) in contribution.iter().enumerate() {
                v.eta[[i, kstar]] += c;
            }
        }
        if let Some(r) = self.current_validation_risk() {
            self.validation_risk.push(r);
        }
        self.history.push(HistoryEntry {
            iteration,
            parameter: kstar,
            learner: jstar,
            risk: self.risk,
            step,
        });
        Ok(Some(StepDiagnostics {
            iteration,
            rss: fits.iter().map(|l| l.iter().map(|f| f.1).collect()).collect(),
            candidate_risks,
            best_learner: best,
            chosen_parameter: kstar,
            chosen_learner: jstar,
            risk_before,
        }))
    }

    /// Freezes the model at the validation-selected iteration (or the last one).
    pub fn finish(self) -> FittedModel {
        let m_run = self.history.len();
        let m_star = if self.validation.is_some() {
            // earliest global minimum
            let mut best = 0;
            for (m, r) in self.validation_risk.iter().enumerate() {
                if *r < self.validation_risk[best] {
                    best = m;
                }
            }
            best
        } else {
            m_run
        };
        let mut coefficients: Vec<Vec<Vec<f64>>> = self
            .learners
            .iter()
            .map(|list| list.iter().map(|l| vec![0.0; l.n_coefficients()]).collect())
            .collect();
        let train_eta = if m_star == m_run {
            coefficients = self.coefficients.clone();
            self.eta.clone()
        } else {
            let mut eta = offset_matrix(&self.offsets, self.responses.nrows());
            for h in &self.history[..m_star] {
                for (acc, s) in coefficients[h.parameter][h.learner].iter_mut().zip(&h.step) {
                    *acc += s;
                }
                let fitted = self.learners[h.parameter][h.learner].setup.design.times(&h.step);
                for (i, f) in fitted.iter().enumerate() {
                    eta[[i, h.parameter]] += f;
                }
            }
            eta
        };
        let learners = self
            .learners
            .into_iter()
            .zip(coefficients)
            .map(|(list, coefs)| {
                list.into_iter()
                    .zip(coefs)
                    .map(|(l, c)| LearnerState {
                        spec: l.spec,
                        basis: l.basis,
                        coefficients: c,
                    })
                    .collect()
            })
            .collect();
        FittedModel {
            spec: self.spec,
            offsets: self.offsets,
            learners,
            m_star,
            iterations_run: m_run,
            history: self.history,
            train_risk: self.train_risk,
            validation_risk: (!self.validation_risk.is_empty()).then_some(self.validation_risk),
            response_names: None,
            train_eta: Some(train_eta),
        }
    }
}

/// Runs `m_max` iterations and freezes the model at the validation-risk minimum.
pub fn fit(spec: &ModelSpec, train: &Dataset, validation: Option<&Dataset>) -> Result<FittedModel> {
    fit_with_observer(spec, train, validation, |_| {})
}

/// As [`fit`], calling `observer` after every iteration.
pub fn fit_with_observer<F: FnMut(&StepDiagnostics)>(
    spec: &ModelSpec,
    train: &Dataset,
    validation: Option<&Dataset>,
    mut observer: F,
) -> Result<FittedModel> {
    let mut booster = Booster::new(spec, train, validation)?;
    for _ in 0..spec.m_max {
        match booster.step()? {
            Some(d) => observer(&d),
            None => break,
        }
    }
    Ok(booster.finish())
}
