use bivboost::simulate::{make_scenario, spatial_map, toeplitz_mvn, ScenarioId, ScenarioSpec, REGION_COLUMN};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(id: ScenarioId, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        n_train: 400,
        n_val: 50,
        n_test: 50,
        grid: (6, 6),
        ..ScenarioSpec::new(id, seed)
    }
}

#[test]
fn toeplitz_covariance_within_three_standard_errors() {
    let n = 100_000;
    let p = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let x = toeplitz_mvn(n, p, 0.5, &mut rng);
    for i in 0..p {
        for j in 0..p {
            let s: f64 = x.column(i).iter().zip(x.column(j)).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            let want = 0.5f64.powi((i as i32 - j as i32).abs());
            // Var(x_i x_j) = 1 + σ_ij² for standard normal margins
            let se = ((1.0 + want * want) / n as f64).sqrt();
            assert!((s - want).abs() < 3.0 * se, "cov[{i},{j}] = {s}, want {want}");
        }
    }
}

#[test]
fn true_predictors_beat_perturbed_ones() {
    // the odds ratio is weakly identified, so samples must be large for a +0.5 shift to show reliably
    for id in ScenarioId::ALL {
        let family = id.family();
        let mut wins = vec![0; family.n_params()];
        for r in 0..20 {
            let s = ScenarioSpec { n_train: 10_000, p: id.default_p().min(20), ..spec(id, 500 + r) };
            let sc = make_scenario(&s).unwrap();
            let y = sc.train.data.responses.view();
            let truth = family.negloglik(y, sc.train.eta.view()).unwrap();
            for (p, w) in wins.iter_mut().enumerate() {
                let mut moved = sc.train.eta.clone();
                moved.column_mut(p).mapv_inplace(|v| v + 0.5);
                if truth < family.negloglik(y, moved.view()).unwrap() {
                    *w += 1;
                }
            }
        }
        for (p, w) in wins.iter().enumerate() {
            assert!(*w >= 19, "{id} parameter {p}: truth won {w}/20");
        }
    }
}

#[test]
fn generation_is_deterministic_in_the_seed() {
    for id in ScenarioId::ALL {
        let s = ScenarioSpec { p: id.default_p().min(20), ..spec(id, 3) };
        let a = make_scenario(&s).unwrap();
        let b = make_scenario(&s).unwrap();
        assert_eq!(a.train.data, b.train.data);
        assert_eq!(a.validation.data, b.validation.data);
        assert_eq!(a.test.eta, b.test.eta);
    }
}

#[test]
fn samples_have_requested_shapes_and_supports() {
    let sc = make_scenario(&spec(ScenarioId::GaussSpatial, 4)).unwrap();
    assert_eq!(sc.train.data.nrows(), 400);
    assert_eq!(sc.validation.data.nrows(), 50);
    assert_eq!(sc.train.eta.ncols(), 5);
    let x1 = sc.train.data.covariates.numeric("x1").unwrap();
    assert!(x1.iter().all(|&v| (0.0..1.0).contains(&v)));
    let regions = sc.train.data.covariates.categorical(REGION_COLUMN).unwrap();
    let map = spatial_map(6, 6);
    assert!(regions.iter().all(|r| map.labels.contains(r)));

    let sc = make_scenario(&spec(ScenarioId::PoisLinear, 4)).unwrap();
    assert!(sc.train.data.responses.iter().all(|&v| v >= 0.0 && v.fract() == 0.0));
    let sc = make_scenario(&spec(ScenarioId::BernLinearLow, 4)).unwrap();
    assert!(sc.train.data.responses.iter().all(|&v| v == 0.0 || v == 1.0));
}

#[test]
fn stored_parameters_follow_the_predictors() {
    let sc = make_scenario(&spec(ScenarioId::PoisNonlinear, 5)).unwrap();
    for (e, th) in sc.test.eta.outer_iter().zip(sc.test.params.outer_iter()) {
        for k in 0..3 {
            assert!((th[k] - e[k].exp()).abs() < 1e-12 * th[k]);
        }
    }
    // the printed predictor at x = (1, 0.5, 0): λ = (1, cos 1, 0) on the log scale
    let eta = ScenarioId::PoisNonlinear.true_eta(&[1.0, 0.5, 0.0], 0.0);
    assert_eq!(eta, vec![1.0, 1f64.cos(), 0.0]);
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(make_scenario(&ScenarioSpec { p: 5, ..spec(ScenarioId::PoisLinear, 1) }).is_err());
    assert!(make_scenario(&ScenarioSpec { n_train: 1, ..spec(ScenarioId::PoisLinear, 1) }).is_err());
    assert!(make_scenario(&ScenarioSpec { grid: (0, 3), ..spec(ScenarioId::GaussSpatial, 1) }).is_err());
    assert!("pois_cubic".parse::<ScenarioId>().is_err());
    assert_eq!("gauss_spatial".parse::<ScenarioId>().unwrap(), ScenarioId::GaussSpatial);
}
