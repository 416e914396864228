//! Predictive performance: per-margin AUC, Brier score and MSEP, joint negative
//! log-likelihood, and the Monte Carlo energy score.

mod report;
mod sample;

pub use report::{score_model, score_predictions, Metric, ScoreOptions, ScoreReport, ScoreRow};
pub use sample::{draw, row_rng, sample};

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::Family;

pub const DEFAULT_MC_SAMPLES: usize = 1000;

/// Mann–Whitney AUC; tied scores count one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Schema(format!("{} scores vs {} labels", scores.len(), labels.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // mid-ranks over tie groups
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = mid;
        }
        i = j + 1;
    }
    let n_pos = labels.iter().filter(|&&l| l == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1.0).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Mean squared difference between predicted probabilities and 0/1 labels.
pub fn brier(probabilities: &[f64], labels: &[f64]) -> f64 {
    let n = probabilities.len().max(1) as f64;
    probabilities.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / n
}

/// Per-margin mean squared error of the predicted means.
pub fn msep(predicted_means: ArrayView2<f64>, responses: ArrayView2<f64>) -> [f64; 2] {
    let n = responses.nrows().max(1) as f64;
    let mut out = [0.0; 2];
    for (m, y) in predicted_means.outer_iter().zip(responses.outer_iter()) {
        out[0] += (m[0] - y[0]).powi(2);
        out[1] += (m[1] - y[1]).powi(2);
    }
    [out[0] / n, out[1] / n]
}

/// Negative log-likelihood from an n×K matrix of distribution parameters.
pub fn nll_score(family: Family, params: ArrayView2<f64>, responses: ArrayView2<f64>) -> Result<f64> {
    Ok(nll_rows(family, params, responses)?.iter().sum())
}

pub(crate) fn nll_rows(family: Family, params: ArrayView2<f64>, responses: ArrayView2<f64>) -> Result<Vec<f64>> {
    params
        .outer_iter()
        .zip(responses.outer_iter())
        .enumerate()
        .map(|(i, (p, y))| {
            let theta = family.params_from_theta(&p.to_vec()).map_err(|e| e.at_row(i))?;
            family
                .log_density([y[0], y[1]], &theta)
                .map(|l| -l)
                .map_err(|e| e.at_row(i))
        })
        .collect()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// (1/S) Σ‖x_s − y‖ − (1/(2S²)) Σ_{s,t} ‖x_s − x_t‖.
pub fn energy_score_from_samples(samples: &[[f64; 2]], y: [f64; 2]) -> f64 {
    let s = samples.len() as f64;
    let first: f64 = samples.iter().map(|&x| dist(x, y)).sum::<f64>() / s;
    let mut pair = 0.0;
    for (i, &a) in samples.iter().enumerate() {
        for &b in &samples[i + 1..] {
            pair += dist(a, b);
        }
    }
    // the double sum counts each unordered pair twice
    first - pair / (s * s)
}

/// Per-row energy scores of the predictive distributions in `params` (n×K).
pub fn energy_scores(family: Family, params: ArrayView2<f64>, responses: ArrayView2<f64>, mc_samples: usize, seed: u64) -> Result<Vec<f64>> {
    if mc_samples == 0 {
        return Err(Error::Spec("energy score needs at least one Monte Carlo sample".into()));
    }
    (0..params.nrows())
        .into_par_iter()
        .map(|i| {
            let theta = family
                .params_from_theta(&params.row(i).to_vec())
                .map_err(|e| e.at_row(i))?;
            let mut rng = row_rng(seed, i as u64);
            let draws: Vec<[f64; 2]> = (0..mc_samples).map(|_| draw(&theta, &mut rng)).collect();
            Ok(energy_score_from_samples(&draws, [responses[[i, 0]], responses[[i, 1]]]))
        })
        .collect()
}

/// Mean energy score over observations.
pub fn energy_score(family: Family, params: ArrayView2<f64>, responses: ArrayView2<f64>, mc_samples: usize, seed: u64) -> Result<f64> {
    let rows = energy_scores(family, params, responses, mc_samples, seed)?;
    Ok(rows.iter().sum::<f64>() / rows.len().max(1) as f64)
}

pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn auc_extremes() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(auc(&[0.5; 6], &[0.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[1.0, 1.0]), Err(Error::SingleClass)));
    }

    #[test]
    fn brier_constants() {
        assert_eq!(brier(&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]), 0.0);
        assert_eq!(brier(&[0.5; 4], &[1.0, 0.0, 0.0, 1.0]), 0.25);
    }

    #[test]
    fn msep_of_sample_mean_is_variance() {
        let y = array![[1.0, 2.0], [3.0, 2.0], [5.0, 8.0]];
        let m = array![[3.0, 4.0], [3.0, 4.0], [3.0, 4.0]];
        let got = msep(m.view(), y.view());
        assert!((got[0] - 8.0 / 3.0).abs() < 1e-15);
        assert!((got[1] - 24.0 / 3.0).abs() < 1e-15);
        assert_eq!(msep(y.view(), y.view()), [0.0, 0.0]);
    }

    #[test]
    fn energy_two_point() {
        let es = energy_score_from_samples(&[[0.0, 0.0], [1.0, 0.0]], [0.0, 0.0]);
        assert!((es - 0.25).abs() < 1e-15);
        assert_eq!(energy_score_from_samples(&[[2.0, 3.0]; 5], [2.0, 3.0]), 0.0);
    }
}
