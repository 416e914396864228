use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use super::{auc, energy_scores, mean_sd, nll_rows, DEFAULT_MC_SAMPLES};
use crate::data::Dataset;
use crate::engine::FittedModel;
use crate::error::{Error, Result};
use crate::family::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auc,
    Brier,
    Msep,
    Nll,
    Energy,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::Brier => "brier",
            Metric::Msep => "msep",
            Metric::Nll => "nll",
            Metric::Energy => "energy",
        }
    }

    pub fn defaults(family: Family) -> Vec<Metric> {
        match family {
            Family::Bernoulli2 => vec![Metric::Auc, Metric::Brier, Metric::Nll, Metric::Energy],
            _ => vec![Metric::Msep, Metric::Nll, Metric::Energy],
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Metric::Auc, Metric::Brier, Metric::Msep, Metric::Nll, Metric::Energy]
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown metric '{s}' (expected auc, brier, msep, nll or energy)")))
    }
}

#[derive(Debug, Clone)]
pub struct ScoreOptions {
    /// `None` selects the family defaults.
    pub metrics: Option<Vec<Metric>>,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            metrics: None,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub metric: String,
    /// "1", "2" or "joint".
    pub margin: String,
    pub value: f64,
    /// Standard deviation of the per-observation contributions, where defined.
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub family: Family,
    pub n: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub rows: Vec<ScoreRow>,
}

impl ScoreReport {
    pub fn get(&self, metric: Metric, margin: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.metric == metric.name() && r.margin == margin)
            .map(|r| r.value)
    }

    /// CSV with columns `metric,margin,value,sd`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "margin", "value", "sd"])?;
        for r in &self.rows {
            let sd = r.sd.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([r.metric.as_str(), r.margin.as_str(), &r.value.to_string(), &sd])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn row(metric: Metric, margin: &str, value: f64, sd: Option<f64>) -> ScoreRow {
    ScoreRow {
        metric: metric.name().to_string(),
        margin: margin.to_string(),
        value,
        sd,
    }
}

/// Scores predictive parameters (n×K) and marginal means (n×2) against responses.
pub fn score_predictions(
    family: Family,
    params: ArrayView2<f64>,
    means: ArrayView2<f64>,
    responses: ArrayView2<f64>,
    options: &ScoreOptions,
) -> Result<ScoreReport> {
    let metrics = options.metrics.clone().unwrap_or_else(|| Metric::defaults(family));
    let mut rows = Vec::new();
    for metric in metrics {
        match metric {
            Metric::Auc | Metric::Brier => {
                if family != Family::Bernoulli2 {
                    return Err(Error::Spec(format!("{metric} is only defined for bernoulli2")));
                }
                for m in 0..2 {
                    let p = means.column(m).to_vec();
                    let y = responses.column(m).to_vec();
                    let margin = (m + 1).to_string();
                    if metric == Metric::Auc {
                        rows.push(row(metric, &margin, auc(&p, &y)?, None));
                    } else {
                        let sq: Vec<f64> = p.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).collect();
                        let (mean, sd) = mean_sd(&sq);
                        rows.push(row(metric, &margin, mean, Some(sd)));
                    }
                }
            }
            Metric::Msep => {
                for m in 0..2 {
                    let sq: Vec<f64> = means
                        .column(m)
                        .iter()
                        .zip(responses.column(m))
                        .map(|(a, b)| (a - b) * (a - b))
                        .collect();
                    let (mean, sd) = mean_sd(&sq);
                    rows.push(row(metric, &(m + 1).to_string(), mean, Some(sd)));
                }
            }
            Metric::Nll => {
                let contributions = nll_rows(family, params, responses)?;
                let (_, sd) = mean_sd(&contributions);
                rows.push(row(metric, "joint", contributions.iter().sum(), Some(sd)));
            }
            Metric::Energy => {
                let es = energy_scores(family, params, responses, options.mc_samples, options.seed)?;
                let (mean, sd) = mean_sd(&es);
                rows.push(row(metric, "joint", mean, Some(sd)));
            }
        }
    }
    Ok(ScoreReport {
        family,
        n: responses.nrows(),
        mc_samples: options.mc_samples,
        seed: options.seed,
        rows,
    })
}

pub fn score_model(model: &FittedModel, data: &Dataset, options: &ScoreOptions) -> Result<ScoreReport> {
    let family = model.spec.family;
    data.validate_for(family)?;
    let pred = model.predict(&data.covariates)?;
    score_predictions(family, pred.params.view(), pred.means.view(), data.responses.view(), options)
}
