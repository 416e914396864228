use ndarray::{Array2, ArrayView2};

use super::OffsetMode;
use crate::error::{Error, Result};
use crate::family::{Family, Link};

const MAX_CYCLES: usize = 500;
const TOLERANCE: f64 = 1e-8;
/// Box for log/logit/correlation predictors while searching for the offset MLE.
const ETA_BOUND: f64 = 30.0;
/// Offsets beyond this magnitude on a non-identity link mean the intercept-only
/// likelihood has no interior maximum (e.g. λ3 → 0 for negatively associated counts).
const BOUNDARY: f64 = 15.0;

fn bounds(link: Link) -> (f64, f64) {
    match link {
        Link::Identity => (f64::NEG_INFINITY, f64::INFINITY),
        _ => (-ETA_BOUND, ETA_BOUND),
    }
}

/// Intercept-only predictors. `fixed` pins individual parameters (e.g. the
/// association at independence); the remaining ones are estimated.
pub fn init_offsets(family: Family, responses: ArrayView2<f64>, mode: OffsetMode, fixed: &[Option<f64>]) -> Result<Vec<f64>> {
    let k = family.n_params();
    let pin = |mut eta: Vec<f64>| {
        for (p, f) in fixed.iter().enumerate() {
            if let Some(v) = f {
                eta[p] = *v;
            }
        }
        eta
    };
    if mode == OffsetMode::Zero {
        return Ok(pin(vec![0.0; k]));
    }
    let n = responses.nrows();
    if n < 2 {
        return Err(Error::Spec(format!("offset estimation needs at least 2 rows, got {n}")));
    }
    for i in 0..n {
        family
            .validate_response([responses[[i, 0]], responses[[i, 1]]])
            .map_err(|e| e.at_row(i))?;
    }
    let mut fixed: Vec<Option<f64>> = (0..k).map(|p| fixed.get(p).copied().flatten()).collect();
    loop {
        let free: Vec<bool> = fixed.iter().map(Option::is_none).collect();
        let mut start = moment_start(family, responses);
        for (p, f) in fixed.iter().enumerate() {
            if let Some(v) = f {
                start[p] = *v;
            }
        }
        let Some(eta) = newton(family, responses, start, &free) else {
            log::warn!("offset Newton iteration diverged; falling back to zero offsets");
            return Ok(pin(vec![0.0; k]));
        };
        // a parameter driven to the edge of its space would start boosting where its
        // gradient vanishes; it starts from zero instead and the rest are re-estimated
        let runaway: Vec<usize> = (0..k)
            .filter(|&p| free[p] && family.links()[p] != Link::Identity && eta[p].abs() >= BOUNDARY)
            .collect();
        if runaway.is_empty() {
            return Ok(eta);
        }
        for p in runaway {
            log::warn!(
                "intercept-only estimate of {} lies on the boundary (predictor {:.1}); starting it from 0",
                family.parameter_names()[p],
                eta[p]
            );
            fixed[p] = Some(0.0);
        }
    }
}

/// Moment-based starting values on the predictor scale.
pub fn moment_start(family: Family, y: ArrayView2<f64>) -> Vec<f64> {
    let n = y.nrows() as f64;
    let m1 = y.column(0).sum() / n;
    let m2 = y.column(1).sum() / n;
    let c11 = y.column(0).iter().map(|v| (v - m1).powi(2)).sum::<f64>() / n;
    let c22 = y.column(1).iter().map(|v| (v - m2).powi(2)).sum::<f64>() / n;
    let c12 = y
        .rows()
        .into_iter()
        .map(|r| (r[0] - m1) * (r[1] - m2))
        .sum::<f64>()
        / n;
    let clip = |v: f64| v.clamp(-ETA_BOUND + 1.0, ETA_BOUND - 1.0);
    match family {
        Family::Bernoulli2 => {
            let logit = |p: f64| {
                let p = p.clamp(0.5 / n, 1.0 - 0.5 / n);
                (p / (1.0 - p)).ln()
            };
            let mut cells = [0.5f64; 4];
            for r in y.rows() {
                cells[(2.0 * r[0] + r[1]) as usize] += 1.0;
            }
            let psi = cells[0] * cells[3] / (cells[1] * cells[2]);
            vec![logit(m1), logit(m2), clip(psi.ln())]
        }
        Family::Poisson2 => {
            let floor = 1e-3;
            let cap = 0.9 * m1.min(m2);
            let l3 = if cap <= floor { floor } else { c12.clamp(floor, cap) };
            let l1 = (m1 - l3).max(floor);
            let l2 = (m2 - l3).max(floor);
            vec![clip(l1.ln()), clip(l2.ln()), clip(l3.ln())]
        }
        Family::Gaussian2 => {
            let s1 = c11.sqrt().max(1e-8);
            let s2 = c22.sqrt().max(1e-8);
            let rho = (c12 / (s1 * s2)).clamp(-0.99, 0.99);
            vec![m1, m2, s1.ln(), s2.ln(), Link::Correlation.forward(rho)]
        }
    }
}

/// Pooled score Σ_i ∂ℓ_i/∂η plus the sum of absolute per-row scores (a rounding scale).
fn pooled_score(family: Family, y: ArrayView2<f64>, eta: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let k = family.n_params();
    let mut g = vec![0.0; k];
    let mut scale = vec![0.0; k];
    let mut buf = [0.0; 5];
    for r in y.rows() {
        family.gradient([r[0], r[1]], eta, &mut buf[..k]).ok()?;
        for p in 0..k {
            g[p] += buf[p];
            scale[p] += buf[p].abs();
        }
    }
    g.iter().all(|v| v.is_finite()).then_some((g, scale))
}

/// Projected gradient: a coordinate sitting on its bound with the score pushing outwards counts as stationary.
fn projected_norm(family: Family, eta: &[f64], g: &[f64], free: &[bool]) -> f64 {
    family
        .links()
        .iter()
        .enumerate()
        .filter(|&(p, _)| free[p])
        .map(|(p, &link)| {
            let (lo, hi) = bounds(link);
            let blocked = (eta[p] <= lo && g[p] < 0.0) || (eta[p] >= hi && g[p] > 0.0);
            if blocked {
                0.0
            } else {
                g[p] * g[p]
            }
        })
        .sum::<f64>()
        .sqrt()
}

fn newton(family: Family, y: ArrayView2<f64>, mut eta: Vec<f64>, free: &[bool]) -> Option<Vec<f64>> {
    let links = family.links();
    let mut best_norm = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..MAX_CYCLES {
        let (g, scale) = pooled_score(family, y, &eta)?;
        let norm = projected_norm(family, &eta, &g, free);
        if norm < TOLERANCE {
            return Some(eta);
        }
        // at the rounding floor of the pooled sum no further progress is possible
        let floor: f64 = scale.iter().zip(free).filter(|(_, &f)| f).map(|(s, _)| s * 1e-13).sum();
        if norm <= floor.max(TOLERANCE) * 10.0 {
            if norm < best_norm {
                best_norm = norm;
                stalled = 0;
            } else {
                stalled += 1;
            }
            if stalled >= 3 {
                log::debug!("offset Newton stopped at rounding floor, |g| = {norm:e}");
                return Some(eta);
            }
        }
        for p in 0..links.len() {
            if !free[p] {
                continue;
            }
            let (gp, _) = pooled_score(family, y, &eta)?;
            let h = 1e-4 * eta[p].abs().max(1.0);
            let mut up = eta.clone();
            up[p] += h;
            let mut dn = eta.clone();
            dn[p] -= h;
            let (gu, _) = pooled_score(family, y, &up)?;
            let (gd, _) = pooled_score(family, y, &dn)?;
            let curv = (gu[p] - gd[p]) / (2.0 * h);
            let step = if curv < 0.0 && curv.is_finite() {
                -gp[p] / curv
            } else {
                gp[p].signum() * 0.5
            };
            let (lo, hi) = bounds(links[p]);
            eta[p] = (eta[p] + step.clamp(-2.0, 2.0)).clamp(lo, hi);
        }
        if eta.iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    let (g, _) = pooled_score(family, y, &eta)?;
    let norm = projected_norm(family, &eta, &g, free);
    if norm < 1e-4 * y.nrows() as f64 {
        log::warn!("offset Newton did not reach |g| < {TOLERANCE:e} in {MAX_CYCLES} cycles (|g| = {norm:e})");
        Some(eta)
    } else {
        None
    }
}

/// Constant predictor matrix built from offsets.
pub(crate) fn offset_matrix(offsets: &[f64], n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, offsets.len()), |(_, k)| offsets[k])
}
