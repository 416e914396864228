use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// K = DᵀD for the `order`-th difference operator on `q` coefficients.
pub fn difference_penalty(order: usize, q: usize) -> Array2<f64> {
    assert!(q > order, "difference penalty needs q > order");
    // binomial stencil with alternating signs, e.g. [1, -2, 1]
    let mut stencil = vec![1.0f64];
    for _ in 0..order {
        let mut next = vec![0.0; stencil.len() + 1];
        for (i, c) in stencil.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c;
        }
        stencil = next;
    }
    let rows = q - order;
    let mut d = Array2::<f64>::zeros((rows, q));
    for r in 0..rows {
        for (j, c) in stencil.iter().enumerate() {
            d[[r, r + j]] = *c;
        }
    }
    d.t().dot(&d)
}

/// Simultaneous diagonalisation of the Gram matrix G = ZᵀZ and a penalty K.
///
/// With G + K = LLᵀ and L⁻¹KL⁻ᵀ = V diag(c) Vᵀ, every G + λK equals
/// W⁻ᵀ diag(1 + (λ − 1)c) W⁻¹ for W = L⁻ᵀV, so degrees of freedom and
/// inverses are available in closed form for any λ.
#[derive(Debug, Clone)]
pub struct PenalizedSystem {
    w: Array2<f64>,
    c: Vec<f64>,
    ridge: f64,
}

impl PenalizedSystem {
    pub fn new(gram: &Array2<f64>, penalty: &Array2<f64>) -> Self {
        let q = gram.nrows();
        let base = gram + penalty;
        let mut ridge = 0.0;
        let chol = match Cholesky::new(&base) {
            Some(c) => c,
            None => {
                // numerically singular: shrink towards zero with a growing ridge on G
                let trace = gram.diag().sum().max(f64::MIN_POSITIVE);
                ridge = 1e-8 * trace / q as f64;
                loop {
                    let mut b = base.clone();
                    for i in 0..q {
                        b[[i, i]] += ridge;
                    }
                    if let Some(c) = Cholesky::new(&b) {
                        break c;
                    }
                    ridge *= 10.0;
                }
            }
        };
        let l = chol.lower();
        // L⁻¹ column by column
        let mut l_inv = Array2::<f64>::zeros((q, q));
        for j in 0..q {
            for i in j..q {
                let mut s = if i == j { 1.0 } else { 0.0 };
                for k in j..i {
                    s -= l[[i, k]] * l_inv[[k, j]];
                }
                l_inv[[i, j]] = s / l[[i, i]];
            }
        }
        let c_mat = l_inv.dot(penalty).dot(&l_inv.t());
        let sym = DMatrix::from_fn(q, q, |i, j| 0.5 * (c_mat[[i, j]] + c_mat[[j, i]]));
        let eig = SymmetricEigen::new(sym);
        let v = Array2::from_shape_fn((q, q), |(i, j)| eig.eigenvectors[(i, j)]);
        let w = l_inv.t().dot(&v);
        // eigenvalues at rounding level belong to the penalty null space
        let c_max = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x));
        let c = eig
            .eigenvalues
            .iter()
            .map(|&x| if x <= 1e-11 * c_max { 0.0 } else { x.min(1.0) })
            .collect();
        Self { w, c, ridge }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// Ridge added to G when G + K was singular; zero otherwise.
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// tr((G + λK)⁻¹ G).
    pub fn df(&self, lambda: f64) -> f64 {
        self.c
            .iter()
            .map(|&c| {
                let g = 1.0 - c;
                if g <= 1e-15 {
                    0.0
                } else {
                    g / (g + lambda * c)
                }
            })
            .sum()
    }

    /// (G + λK)⁻¹, using the ridge-adjusted G when one was needed.
    pub fn inverse(&self, lambda: f64) -> Array2<f64> {
        let q = self.dim();
        let mut scaled = self.w.clone();
        for (j, &c) in self.c.iter().enumerate() {
            let d = (1.0 - c) + lambda * c;
            let s = if d > 1e-300 { 1.0 / d } else { 0.0 };
            for i in 0..q {
                scaled[[i, j]] *= s;
            }
        }
        scaled.dot(&self.w.t())
    }
}

/// Effective degrees of freedom tr(Z (ZᵀZ + λK)⁻¹ Zᵀ) = tr((ZᵀZ + λK)⁻¹ ZᵀZ).
pub fn hat_trace(gram: &Array2<f64>, penalty: &Array2<f64>, lambda: f64) -> f64 {
    PenalizedSystem::new(gram, penalty).df(lambda)
}

const LOG10_LAMBDA_RANGE: (f64, f64) = (-20.0, 20.0);

/// Smoothing parameter whose hat-matrix trace equals `target_df`, by bisection on log10 λ.
pub fn calibrate_lambda(gram: &Array2<f64>, penalty: &Array2<f64>, target_df: f64) -> Result<f64> {
    calibrate(&PenalizedSystem::new(gram, penalty), target_df)
}

pub fn calibrate(system: &PenalizedSystem, target_df: f64) -> Result<f64> {
    let (lo, hi) = LOG10_LAMBDA_RANGE;
    let df_max = system.df(10f64.powf(lo));
    let df_min = system.df(10f64.powf(hi));
    if !(target_df < df_max - 1e-9 && target_df > df_min + 1e-9) {
        return Err(Error::Calibration {
            target: target_df,
            min: df_min,
            max: df_max,
        });
    }
    let (mut a, mut b) = (lo, hi);
    let mut mid = 0.5 * (a + b);
    for _ in 0..200 {
        mid = 0.5 * (a + b);
        let df = system.df(10f64.powf(mid));
        if (df - target_df).abs() < 1e-10 {
            break;
        }
        // df decreases in λ
        if df > target_df {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    Ok(10f64.powf(mid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    /// Direct tr((G + λK)⁻¹ G) through a Cholesky solve, for moderate λ.
    fn direct_trace(gram: &Array2<f64>, k: &Array2<f64>, lambda: f64) -> f64 {
        let chol = Cholesky::new(&(gram + &(k * lambda))).unwrap();
        chol.trace_of_inverse_times(gram)
    }

    fn spline_like_gram(q: usize) -> Array2<f64> {
        Array2::from_shape_fn((q, q), |(i, j)| match i.abs_diff(j) {
            0 => 3.0 + (i % 3) as f64,
            1 => 0.8,
            2 => 0.1,
            _ => 0.0,
        })
    }

    #[test]
    fn explicit_stencil_q4() {
        let d = array![[1.0, -2.0, 1.0, 0.0], [0.0, 1.0, -2.0, 1.0]];
        let want = d.t().dot(&d);
        assert_eq!(difference_penalty(2, 4), want);
    }

    #[test]
    fn null_space_is_linear() {
        let k = difference_penalty(2, 10);
        let beta = Array1::from_iter((0..10).map(|i| 3.0 - 0.7 * i as f64));
        assert!(beta.dot(&k.dot(&beta)).abs() < 1e-10);
        let ones = Array1::<f64>::ones(10);
        assert!(ones.dot(&k.dot(&ones)).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_is_squared_second_differences() {
        let beta: [f64; 7] = [0.3, -1.2, 2.5, 0.1, 0.9, -0.4, 1.7];
        let k = difference_penalty(2, beta.len());
        let b = Array1::from(beta.to_vec());
        let direct: f64 = (0..beta.len() - 2)
            .map(|i| (beta[i] - 2.0 * beta[i + 1] + beta[i + 2]).powi(2))
            .sum();
        assert!((b.dot(&k.dot(&b)) - direct).abs() < 1e-12);
    }

    #[test]
    fn spectral_df_matches_direct_solve() {
        let g = spline_like_gram(12);
        let k = difference_penalty(2, 12);
        let sys = PenalizedSystem::new(&g, &k);
        for &lambda in &[0.0, 1e-3, 0.5, 7.0, 300.0] {
            assert!((sys.df(lambda) - direct_trace(&g, &k, lambda)).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_inverse_matches_direct_solve() {
        let g = spline_like_gram(9);
        let k = difference_penalty(2, 9);
        let sys = PenalizedSystem::new(&g, &k);
        let lambda = 3.7;
        let inv = sys.inverse(lambda);
        let prod = (&g + &(&k * lambda)).dot(&inv);
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[[i, j]] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn unattainable_df() {
        let gram = Array2::<f64>::eye(5) * 10.0;
        let k = difference_penalty(2, 5);
        assert!(matches!(calibrate_lambda(&gram, &k, 6.0), Err(Error::Calibration { .. })));
        assert!(matches!(calibrate_lambda(&gram, &k, 1.5), Err(Error::Calibration { .. })));
        let lambda = calibrate_lambda(&gram, &k, 3.0).unwrap();
        assert!((hat_trace(&gram, &k, lambda) - 3.0).abs() < 1e-9);
        assert!((direct_trace(&gram, &k, lambda) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn trace_limits() {
        let gram = Array2::<f64>::eye(6) * 4.0;
        let k = difference_penalty(2, 6);
        assert!((hat_trace(&gram, &k, 0.0) - 6.0).abs() < 1e-12);
        assert!((hat_trace(&gram, &k, 1e12) - 2.0).abs() < 1e-6);
        assert!((hat_trace(&gram, &k, 1e20) - 2.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for e in -6..8 {
            let df = hat_trace(&gram, &k, 10f64.powi(e));
            assert!(df < prev);
            prev = df;
        }
    }

    #[test]
    fn singular_gram_uses_ridge() {
        let gram = array![[4.0, 0.0], [0.0, 0.0]];
        let k = Array2::<f64>::zeros((2, 2));
        let sys = PenalizedSystem::new(&gram, &k);
        assert!(sys.ridge() > 0.0);
        assert!(sys.inverse(0.0).iter().all(|v| v.is_finite()));
    }
}
