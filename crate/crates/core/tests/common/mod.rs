#![allow(dead_code)]

use bivboost::engine::FittedModel;
use bivboost::family::Family;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Richardson-extrapolated central difference of log p(y | η) in coordinate k.
pub fn fd_partial(family: Family, y: [f64; 2], eta: &[f64], k: usize) -> f64 {
    let f = |h: f64| {
        let mut up = eta.to_vec();
        let mut down = eta.to_vec();
        up[k] += h;
        down[k] -= h;
        (family.log_density_eta(y, &up).unwrap() - family.log_density_eta(y, &down).unwrap()) / (2.0 * h)
    };
    let h = 1e-3;
    (4.0 * f(h / 2.0) - f(h)) / 3.0
}

/// Largest |analytic − numeric| / max(|analytic|, 1) over all coordinates.
pub fn gradient_error(family: Family, y: [f64; 2], eta: &[f64]) -> f64 {
    let mut g = vec![0.0; family.n_params()];
    family.gradient(y, eta, &mut g).unwrap();
    (0..g.len())
        .map(|k| (g[k] - fd_partial(family, y, eta, k)).abs() / g[k].abs().max(1.0))
        .fold(0.0, f64::max)
}

/// A random predictor vector and a response drawn from the implied distribution.
pub fn random_case(family: Family, rng: &mut ChaCha8Rng) -> ([f64; 2], Vec<f64>) {
    let eta: Vec<f64> = match family {
        Family::Bernoulli2 => vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(-3.0..3.0)],
        Family::Poisson2 => (0..3).map(|_| rng.random_range(-3.0..2.5)).collect(),
        Family::Gaussian2 => vec![
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-2.5..2.5),
        ],
    };
    let params = family.inverse_link(&eta).unwrap();
    let y = bivboost::scoring::draw(&params, rng);
    (y, eta)
}

/// Whether any learner of `covariate` in `parameter` was chosen up to m*.
pub fn covariate_selected(model: &FittedModel, parameter: usize, covariate: &str) -> bool {
    model.learners[parameter]
        .iter()
        .enumerate()
        .any(|(j, l)| l.spec.covariate == covariate && model.is_selected(parameter, j))
}
