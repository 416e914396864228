use ndarray::Array2;

/// Row-banded design matrix: row i has `width` consecutive non-zeros starting at column `start[i]`.
///
/// Covers every base-learner here: B-spline rows (degree + 1 wide), region
/// indicators (1 wide) and the linear design [1, x − c] (2 wide).
#[derive(Debug, Clone, PartialEq)]
pub struct BandedDesign {
    ncols: usize,
    width: usize,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl BandedDesign {
    pub fn new(ncols: usize, width: usize, start: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(start.len() * width, values.len());
        assert!(start.iter().all(|&s| s + width <= ncols));
        Self {
            ncols,
            width,
            start,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.start.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        (self.start[i], &self.values[i * self.width..(i + 1) * self.width])
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut z = Array2::zeros((self.nrows(), self.ncols));
        for i in 0..self.nrows() {
            let (s, vals) = self.row(i);
            for (j, v) in vals.iter().enumerate() {
                z[[i, s + j]] = *v;
            }
        }
        z
    }

    /// ZᵀZ
    pub fn gram(&self) -> Array2<f64> {
        let mut g = Array2::zeros((self.ncols, self.ncols));
        for i in 0..self.nrows() {
            let (s, vals) = self.row(i);
            for (a, va) in vals.iter().enumerate() {
                for (b, vb) in vals.iter().enumerate() {
                    g[[s + a, s + b]] += va * vb;
                }
            }
        }
        g
    }

    /// Zᵀu
    pub fn transpose_times(&self, u: &[f64]) -> Vec<f64> {
        let w = self.width;
        if w == 2 && self.ncols == 2 {
            // linear learners: both columns span every row
            let (mut a, mut b) = (0.0, 0.0);
            for (vals, &ui) in self.values.chunks_exact(2).zip(u) {
                a += vals[0] * ui;
                b += vals[1] * ui;
            }
            return vec![a, b];
        }
        let mut out = vec![0.0; self.ncols];
        for ((&s, vals), &ui) in self.start.iter().zip(self.values.chunks_exact(w)).zip(u) {
            for (o, v) in out[s..s + w].iter_mut().zip(vals) {
                *o += v * ui;
            }
        }
        out
    }

    /// Zβ
    pub fn times(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.nrows())
            .map(|i| {
                let (s, vals) = self.row(i);
                vals.iter().zip(&beta[s..]).map(|(v, b)| v * b).sum()
            })
            .collect()
    }
}
