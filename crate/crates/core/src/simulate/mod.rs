//! Simulation scenarios: Toeplitz-normal or uniform covariates, the printed
//! true predictors, and response draws from the matching family.

mod map;

pub use map::{spatial_map, SpatialMap};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::data::{Column, Covariates, Dataset};
use crate::engine::{ModelSpec, Stabilization};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::learners::{BaseLearnerSpec, DEFAULT_MRF_DF};
use crate::scoring::draw;

pub const TOEPLITZ_RHO: f64 = 0.5;
pub const REGION_COLUMN: &str = "region";

/// n×p draws from N(0, Σ) with Σ_ij = ρ^|i−j|.
///
/// The Cholesky factor of this Toeplitz matrix is the AR(1) filter
/// L_ij = ρ^(i−j) · c_j with c_1 = 1, c_j = √(1 − ρ²), so X = L z is applied as
/// the recursion x_j = ρ x_{j−1} + √(1 − ρ²) z_j.
pub fn toeplitz_mvn<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> Array2<f64> {
    let c = (1.0 - rho * rho).sqrt();
    let mut x = Array2::zeros((n, p));
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = StandardNormal.sample(rng);
            let v = if j == 0 { z } else { rho * prev + c * z };
            x[[i, j]] = v;
            prev = v;
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    BernLinearLow,
    BernLinearHigh,
    PoisLinear,
    PoisNonlinear,
    GaussSpatial,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::BernLinearLow,
        ScenarioId::BernLinearHigh,
        ScenarioId::PoisLinear,
        ScenarioId::PoisNonlinear,
        ScenarioId::GaussSpatial,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ScenarioId::BernLinearLow => "bern_linear_low",
            ScenarioId::BernLinearHigh => "bern_linear_high",
            ScenarioId::PoisLinear => "pois_linear",
            ScenarioId::PoisNonlinear => "pois_nonlinear",
            ScenarioId::GaussSpatial => "gauss_spatial",
        }
    }

    pub fn family(self) -> Family {
        match self {
            ScenarioId::BernLinearLow | ScenarioId::BernLinearHigh => Family::Bernoulli2,
            ScenarioId::PoisLinear | ScenarioId::PoisNonlinear => Family::Poisson2,
            ScenarioId::GaussSpatial => Family::Gaussian2,
        }
    }

    pub fn default_p(self) -> usize {
        match self {
            ScenarioId::BernLinearHigh => 1000,
            _ => 10,
        }
    }

    /// Covariates are Toeplitz normal in the linear settings, independent U(0,1) otherwise.
    pub fn toeplitz(self) -> bool {
        matches!(
            self,
            ScenarioId::BernLinearLow | ScenarioId::BernLinearHigh | ScenarioId::PoisLinear
        )
    }

    pub fn is_spatial(self) -> bool {
        self == ScenarioId::GaussSpatial
    }

    /// True additive predictors for one covariate row (`x[0]` is X1) and spatial effect.
    pub fn true_eta(self, x: &[f64], f_spat: f64) -> Vec<f64> {
        let x = |j: usize| x[j - 1];
        match self {
            ScenarioId::BernLinearLow | ScenarioId::BernLinearHigh => vec![
                x(1) + 1.5 * x(2) - x(3) + 1.5 * x(4),
                2.0 * x(1) - x(2) + 1.5 * x(3),
                -1.5 + x(5) + 1.5 * x(6),
            ],
            ScenarioId::PoisLinear => vec![
                -x(1) + 0.5 * x(2) + 1.5 * x(3),
                2.0 * x(1) - x(3) + 1.5 * x(4) + x(5),
                0.5 * x(5) + x(6) - 0.5 * x(7),
            ],
            ScenarioId::PoisNonlinear => vec![x(1).sqrt() * x(1), (2.0 * x(2)).cos(), x(3).sin()],
            ScenarioId::GaussSpatial => vec![
                (2.0 * x(1)).sin() / 0.5 + x(6) + 0.5 * x(7) + f_spat,
                2.0 + 3.0 * (2.0 * x(2)).cos() + 0.5 * x(7) + x(8) + f_spat,
                x(3).sqrt() * x(3) - 0.5 * x(8) + f_spat,
                x(4).cos() * x(4) + 0.25 * x(9) + f_spat,
                (x(5) * x(5)).ln() + x(10) + f_spat,
            ],
        }
    }

    /// Truth record: informative covariates per parameter and, for linear
    /// settings, their coefficients (NaN for non-linear terms).
    pub fn truth(self) -> Truth {
        let lin = |terms: &[(&str, f64)]| terms.iter().map(|(n, c)| (n.to_string(), *c)).collect::<Vec<_>>();
        let nl = |names: &[&str]| names.iter().map(|n| (n.to_string(), f64::NAN)).collect::<Vec<_>>();
        let terms = match self {
            ScenarioId::BernLinearLow | ScenarioId::BernLinearHigh => vec![
                lin(&[("x1", 1.0), ("x2", 1.5), ("x3", -1.0), ("x4", 1.5)]),
                lin(&[("x1", 2.0), ("x2", -1.0), ("x3", 1.5)]),
                lin(&[("x5", 1.0), ("x6", 1.5)]),
            ],
            ScenarioId::PoisLinear => vec![
                lin(&[("x1", -1.0), ("x2", 0.5), ("x3", 1.5)]),
                lin(&[("x1", 2.0), ("x3", -1.0), ("x4", 1.5), ("x5", 1.0)]),
                lin(&[("x5", 0.5), ("x6", 1.0), ("x7", -0.5)]),
            ],
            ScenarioId::PoisNonlinear => vec![nl(&["x1"]), nl(&["x2"]), nl(&["x3"])],
            ScenarioId::GaussSpatial => {
                let mut t = vec![
                    [nl(&["x1"]), lin(&[("x6", 1.0), ("x7", 0.5)])].concat(),
                    [nl(&["x2"]), lin(&[("x7", 0.5), ("x8", 1.0)])].concat(),
                    [nl(&["x3"]), lin(&[("x8", -0.5)])].concat(),
                    [nl(&["x4"]), lin(&[("x9", 0.25)])].concat(),
                    [nl(&["x5"]), lin(&[("x10", 1.0)])].concat(),
                ];
                for p in &mut t {
                    p.push((REGION_COLUMN.to_string(), f64::NAN));
                }
                t
            }
        };
        let intercepts = match self {
            ScenarioId::BernLinearLow | ScenarioId::BernLinearHigh => vec![0.0, 0.0, -1.5],
            ScenarioId::GaussSpatial => vec![0.0, 2.0, 0.0, 0.0, 0.0],
            _ => vec![0.0; 3],
        };
        Truth {
            scenario: self,
            terms,
            intercepts,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.id() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = ScenarioId::ALL.iter().map(|i| i.id()).collect();
                Error::Parse(format!("unknown scenario '{s}' (expected one of {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truth {
    pub scenario: ScenarioId,
    /// Per parameter: (covariate, coefficient); coefficient is NaN for non-linear or spatial terms.
    pub terms: Vec<Vec<(String, f64)>>,
    pub intercepts: Vec<f64>,
}

impl Truth {
    pub fn informative(&self, parameter: usize) -> Vec<&str> {
        self.terms[parameter].iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn coefficient(&self, parameter: usize, covariate: &str) -> Option<f64> {
        self.terms[parameter]
            .iter()
            .find(|(n, _)| n == covariate)
            .map(|(_, c)| *c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: ScenarioId,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub p: usize,
    pub seed: u64,
    /// Grid used in place of a real region map (spatial scenario only).
    pub grid: (usize, usize),
}

impl ScenarioSpec {
    pub fn new(scenario: ScenarioId, seed: u64) -> Self {
        Self {
            scenario,
            n_train: 1000,
            n_val: 1500,
            n_test: 1000,
            p: scenario.default_p(),
            seed,
            grid: (18, 18),
        }
    }

    /// The p = 200 variant of the high-dimensional Bernoulli setting.
    pub fn fast(mut self) -> Self {
        if self.scenario == ScenarioId::BernLinearHigh {
            self.p = 200;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let min_p = match self.scenario {
            ScenarioId::BernLinearLow | ScenarioId::BernLinearHigh => 6,
            ScenarioId::PoisLinear => 7,
            ScenarioId::PoisNonlinear => 3,
            ScenarioId::GaussSpatial => 10,
        };
        if self.p < min_p {
            return Err(Error::Spec(format!("{} needs p >= {min_p}, got {}", self.scenario, self.p)));
        }
        if self.n_train < 2 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::Spec("sample sizes must be positive (n_train >= 2)".into()));
        }
        if self.scenario.is_spatial() && (self.grid.0 == 0 || self.grid.1 == 0) {
            return Err(Error::Spec("grid dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// One simulated sample with its true predictors and parameters.
#[derive(Debug, Clone)]
pub struct SimulatedSample {
    pub data: Dataset,
    pub eta: Array2<f64>,
    pub params: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub train: SimulatedSample,
    pub validation: SimulatedSample,
    pub test: SimulatedSample,
    pub map: Option<SpatialMap>,
    pub truth: Truth,
}

fn covariate_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

fn simulate_sample(spec: &ScenarioSpec, n: usize, map: Option<&SpatialMap>, rng: &mut ChaCha8Rng) -> Result<SimulatedSample> {
    let id = spec.scenario;
    let family = id.family();
    let x = if id.toeplitz() {
        toeplitz_mvn(n, spec.p, TOEPLITZ_RHO, rng)
    } else {
        Array2::from_shape_fn((n, spec.p), |_| rng.random::<f64>())
    };
    let regions: Option<Vec<usize>> = map.map(|m| (0..n).map(|_| rng.random_range(0..m.labels.len())).collect());
    let k = family.n_params();
    let mut eta = Array2::zeros((n, k));
    let mut params = Array2::zeros((n, k));
    let mut responses = Array2::zeros((n, 2));
    for i in 0..n {
        let f_spat = match (map, &regions) {
            (Some(m), Some(r)) => m.f_spat[r[i]],
            _ => 0.0,
        };
        let row = id.true_eta(&x.row(i).to_vec(), f_spat);
        let theta = family.inverse_link(&row).map_err(|e| e.at_row(i))?;
        let y = draw(&theta, rng);
        for (c, v) in row.iter().enumerate() {
            eta[[i, c]] = *v;
        }
        for (c, v) in theta.to_vec().into_iter().enumerate() {
            params[[i, c]] = v;
        }
        responses[[i, 0]] = y[0];
        responses[[i, 1]] = y[1];
    }
    let mut cov = Covariates::new();
    for (j, name) in covariate_names(spec.p).into_iter().enumerate() {
        cov.push(name, Column::Numeric(x.column(j).to_vec()))?;
    }
    if let (Some(m), Some(r)) = (map, regions) {
        cov.push(REGION_COLUMN, Column::Categorical(r.into_iter().map(|i| m.labels[i].clone()).collect()))?;
    }
    Ok(SimulatedSample {
        data: Dataset::new(responses, cov)?,
        eta,
        params,
    })
}

/// Draws training, validation and test samples; bit-reproducible in `spec.seed`.
pub fn make_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let map = spec.scenario.is_spatial().then(|| spatial_map(spec.grid.0, spec.grid.1));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let train = simulate_sample(spec, spec.n_train, map.as_ref(), &mut rng)?;
    let validation = simulate_sample(spec, spec.n_val, map.as_ref(), &mut rng)?;
    let test = simulate_sample(spec, spec.n_test, map.as_ref(), &mut rng)?;
    Ok(Scenario {
        spec: spec.clone(),
        train,
        validation,
        test,
        map,
        truth: spec.scenario.truth(),
    })
}

impl Scenario {
    /// The candidate learners of the benchmark study for this scenario.
    pub fn default_model(&self) -> ModelSpec {
        let id = self.spec.scenario;
        let names = covariate_names(self.spec.p);
        let learners: Vec<BaseLearnerSpec> = match id {
            ScenarioId::PoisNonlinear => names.iter().map(BaseLearnerSpec::pspline).collect(),
            ScenarioId::GaussSpatial => {
                let mut l: Vec<BaseLearnerSpec> = names[..5].iter().map(BaseLearnerSpec::pspline).collect();
                l.extend(names[5..].iter().map(BaseLearnerSpec::linear));
                let adjacency = self.map.as_ref().expect("spatial scenario has a map").adjacency.clone();
                l.push(BaseLearnerSpec::mrf(REGION_COLUMN, adjacency, DEFAULT_MRF_DF));
                l
            }
            _ => names.iter().map(BaseLearnerSpec::linear).collect(),
        };
        let mut spec = ModelSpec::with_all(id.family(), learners);
        if id.family() == Family::Poisson2 {
            // raw count gradients are heavy tailed enough to make every step for the second mean overshoot
            spec.stabilization = Stabilization::L2;
        }
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky_lower;

    #[test]
    fn recursion_is_the_cholesky_factor() {
        let p = 6;
        let sigma = Array2::from_shape_fn((p, p), |(i, j)| 0.5f64.powi((i as i32 - j as i32).abs()));
        let l = cholesky_lower(&sigma).unwrap();
        // feed unit vectors through the recursion to read off its matrix
        let c = (1.0f64 - 0.25).sqrt();
        for i in 0..p {
            for j in 0..=i {
                let want = if j == 0 { 0.5f64.powi(i as i32) } else { 0.5f64.powi((i - j) as i32) * c };
                assert!((l[[i, j]] - want).abs() < 1e-12, "L[{i},{j}]");
            }
        }
    }

    #[test]
    fn bern_linear_at_origin() {
        let eta = ScenarioId::BernLinearLow.true_eta(&[0.0; 10], 0.0);
        let theta = Family::Bernoulli2.inverse_link(&eta).unwrap().to_vec();
        assert_eq!(theta[0], 0.5);
        assert_eq!(theta[1], 0.5);
        assert!((theta[2] - (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gauss_mu2_at_half() {
        let eta = ScenarioId::GaussSpatial.true_eta(&[0.5; 10], 0.0);
        assert!((eta[1] - (2.0 + 3.0 * 1f64.cos() + 0.75)).abs() < 1e-15);
    }

    #[test]
    fn informative_sets_follow_predictors() {
        let t = ScenarioId::PoisLinear.truth();
        assert_eq!(t.informative(2), vec!["x5", "x6", "x7"]);
        assert_eq!(t.coefficient(0, "x3"), Some(1.5));
        // a covariate with a nonzero coefficient moves the predictor
        for id in ScenarioId::ALL {
            let truth = id.truth();
            let base = vec![0.4; 10];
            let eta0 = id.true_eta(&base, 0.0);
            for p in 0..truth.terms.len() {
                for j in 1..=10 {
                    let name = format!("x{j}");
                    let mut x = base.clone();
                    x[j - 1] += 0.1;
                    let moved = (id.true_eta(&x, 0.0)[p] - eta0[p]).abs() > 1e-12;
                    assert_eq!(moved, truth.informative(p).contains(&name.as_str()), "{id} param {p} {name}");
                }
            }
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let spec = ScenarioSpec {
            n_train: 50,
            n_val: 20,
            n_test: 20,
            ..ScenarioSpec::new(ScenarioId::GaussSpatial, 7)
        };
        let a = make_scenario(&spec).unwrap();
        let b = make_scenario(&spec).unwrap();
        assert_eq!(a.train.data, b.train.data);
        assert_eq!(a.test.params, b.test.params);
        let other = make_scenario(&ScenarioSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.train.data, other.train.data);
    }
}
