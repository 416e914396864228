use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::family::{cell_probs, Params};

/// One draw from the bivariate law described by `params`.
pub fn draw<R: Rng + ?Sized>(params: &Params, rng: &mut R) -> [f64; 2] {
    match params {
        Params::Binary(p) => {
            let cells = cell_probs(p);
            let u: f64 = rng.random();
            // cells in (0,0), (0,1), (1,0), (1,1) order
            if u < cells.p00 {
                [0.0, 0.0]
            } else if u < cells.p00 + cells.p01 {
                [0.0, 1.0]
            } else if u < cells.p00 + cells.p01 + cells.p10 {
                [1.0, 0.0]
            } else {
                [1.0, 1.0]
            }
        }
        Params::Poisson(p) => {
            // trivariate reduction: Y1 = Z1 + Z3, Y2 = Z2 + Z3
            let z = |lambda: f64, rng: &mut R| -> f64 {
                Poisson::new(lambda).map(|d| d.sample(rng)).unwrap_or(0.0)
            };
            let z1 = z(p.lambda1, rng);
            let z2 = z(p.lambda2, rng);
            let z3 = z(p.lambda3, rng);
            [z1 + z3, z2 + z3]
        }
        Params::Gaussian(p) => {
            let e1: f64 = StandardNormal.sample(rng);
            let e2: f64 = StandardNormal.sample(rng);
            let s = (1.0 - p.rho * p.rho).max(0.0).sqrt();
            [p.mu1 + p.sigma1 * e1, p.mu2 + p.sigma2 * (p.rho * e1 + s * e2)]
        }
    }
}

/// Generator for row `row` of a seeded Monte Carlo run; independent of evaluation order.
pub fn row_rng(seed: u64, row: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row);
    rng
}

/// `count` draws as a count×2 matrix, deterministic in `seed`.
pub fn sample(params: &Params, count: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros((count, 2));
    for i in 0..count {
        let [a, b] = draw(params, &mut rng);
        out[[i, 0]] = a;
        out[[i, 1]] = b;
    }
    out
}
