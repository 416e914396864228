mod common;

use bivboost::data::{Column, Covariates, Dataset};
use bivboost::engine::{fit, fit_with_observer, init_offsets, Booster, ModelSpec, OffsetMode, Stabilization};
use bivboost::family::Family;
use bivboost::learners::{BaseLearnerSpec, PreparedLearner};
use bivboost::simulate::{make_scenario, ScenarioId, ScenarioSpec};
use ndarray::Array2;
use proptest::prelude::*;

fn small(id: ScenarioId, seed: u64) -> bivboost::simulate::Scenario {
    make_scenario(&ScenarioSpec {
        n_train: 300,
        n_val: 300,
        n_test: 100,
        grid: (5, 5),
        ..ScenarioSpec::new(id, seed)
    })
    .unwrap()
}

fn with_m(mut spec: ModelSpec, m: usize) -> ModelSpec {
    spec.m_max = m;
    spec
}

#[test]
fn zero_iterations_keep_the_offsets() {
    let sc = small(ScenarioId::PoisLinear, 1);
    let model = fit(&with_m(sc.default_model(), 0), &sc.train.data, Some(&sc.validation.data)).unwrap();
    assert_eq!(model.m_star, 0);
    assert!(model.history.is_empty());
    let eta = model.predict_eta(&sc.test.data.covariates).unwrap();
    for row in eta.outer_iter() {
        assert_eq!(row.to_vec(), model.offsets);
    }
    let offsets = init_offsets(Family::Poisson2, sc.train.data.responses.view(), OffsetMode::Mle, &[None; 3]).unwrap();
    assert_eq!(offsets, model.offsets);
}

#[test]
fn duplicate_learners_resolve_to_the_lowest_index() {
    let sc = small(ScenarioId::BernLinearLow, 2);
    let mut spec = ModelSpec::with_all(Family::Bernoulli2, vec![BaseLearnerSpec::linear("x1"), BaseLearnerSpec::linear("x1")]);
    spec.m_max = 60;
    let mut ties = 0;
    let model = fit_with_observer(&spec, &sc.train.data, None, |d| {
        for (p, rss) in d.rss.iter().enumerate() {
            assert_eq!(rss[0].to_bits(), rss[1].to_bits());
            assert_eq!(d.best_learner[p], Some(0));
            ties += 1;
        }
    })
    .unwrap();
    assert!(ties > 0);
    assert!(model.history.iter().all(|h| h.learner == 0));
}

#[test]
fn stopping_iteration_is_the_earliest_validation_minimum() {
    let sc = small(ScenarioId::PoisLinear, 3);
    let model = fit(&with_m(sc.default_model(), 400), &sc.train.data, Some(&sc.validation.data)).unwrap();
    let v = model.validation_risk.as_ref().unwrap();
    assert_eq!(v.len(), model.iterations_run + 1);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(model.m_star, v.iter().position(|&r| r == min).unwrap());
    assert_eq!(model.train_risk.len(), v.len());
}

#[test]
fn frozen_model_reproduces_training_predictors() {
    for id in [ScenarioId::PoisLinear, ScenarioId::GaussSpatial, ScenarioId::BernLinearLow] {
        let sc = small(id, 4);
        let model = fit(&with_m(sc.default_model(), 300), &sc.train.data, Some(&sc.validation.data)).unwrap();
        let stored = model.train_eta.as_ref().unwrap();
        let again = model.predict_eta(&sc.train.data.covariates).unwrap();
        let gap = stored.iter().zip(&again).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-10, "{id}: {gap}");
        // risk at m* is the in-sample risk of the frozen predictors
        let risk = id.family().negloglik(sc.train.data.responses.view(), stored.view()).unwrap();
        assert!((risk - model.train_risk[model.m_star]).abs() < 1e-8 * risk.abs());
    }
}

#[test]
fn fixed_association_never_moves() {
    let sc = small(ScenarioId::PoisLinear, 5);
    let spec = with_m(sc.default_model(), 200).independence();
    let model = fit(&spec, &sc.train.data, None).unwrap();
    assert_eq!(model.offsets[2], Family::Poisson2.independence_eta());
    assert!(model.history.iter().all(|h| h.parameter != 2));
    let eta = model.predict_eta(&sc.test.data.covariates).unwrap();
    assert!(eta.column(2).iter().all(|&v| v == -25.0));
}

#[test]
fn fits_are_deterministic_across_thread_counts() {
    let sc = small(ScenarioId::GaussSpatial, 6);
    let spec = with_m(sc.default_model(), 80);
    let a = fit(&spec, &sc.train.data, Some(&sc.validation.data)).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| fit(&spec, &sc.train.data, Some(&sc.validation.data)).unwrap());
    assert_eq!(a.history, b.history);
    assert_eq!(a, b);
}

#[test]
fn first_step_is_nu_times_the_least_squares_fit_of_the_gradient() {
    let sc = small(ScenarioId::BernLinearLow, 7);
    let mut spec = ModelSpec::with_all(Family::Bernoulli2, vec![BaseLearnerSpec::linear("x2")]);
    spec.m_max = 1;
    let mut booster = Booster::new(&spec, &sc.train.data, None).unwrap();
    let offsets = booster.offsets().to_vec();
    let d = booster.step().unwrap().unwrap();
    let k = d.chosen_parameter;
    // negative gradient at the offsets
    let n = sc.train.data.nrows();
    let mut u = vec![0.0; n];
    let mut g = [0.0; 3];
    for (i, ui) in u.iter_mut().enumerate() {
        Family::Bernoulli2.gradient(sc.train.data.response(i), &offsets, &mut g).unwrap();
        *ui = g[k];
    }
    let learner = PreparedLearner::prepare(&BaseLearnerSpec::linear("x2"), &sc.train.data.covariates).unwrap();
    let want = learner.fit(&u);
    let step = &booster.history()[0].step;
    for (s, c) in step.iter().zip(&want.coefficients) {
        assert!((s - 0.1 * c).abs() < 1e-12);
    }
    assert!((d.rss[k][0] - want.rss).abs() < 1e-9 * want.rss);
}

#[test]
fn stabilization_rescales_the_step() {
    let sc = small(ScenarioId::PoisLinear, 8);
    let mut spec = ModelSpec::with_all(Family::Poisson2, vec![BaseLearnerSpec::linear("x3")]);
    spec.m_max = 1;
    let raw = fit(&spec, &sc.train.data, None).unwrap();
    spec.stabilization = Stabilization::L2;
    let scaled = fit(&spec, &sc.train.data, None).unwrap();
    assert_eq!(Stabilization::None.scale(&[3.0, 4.0]), 1.0);
    assert!((Stabilization::L2.scale(&[3.0, 4.0]) - 12.5f64.sqrt()).abs() < 1e-15);
    assert_eq!(Stabilization::Mad.scale(&[1.0, 2.0, 4.0]), 1.0);
    assert_eq!(Stabilization::Mad.scale(&[0.0, 0.0, 0.0]), 1.0);
    assert_eq!(raw.history.len(), 1);
    assert_eq!(scaled.history.len(), 1);
}

#[test]
fn no_improvement_stop_rule() {
    // a constant covariate can only move the intercept, so progress stalls
    let n = 200;
    let y = Array2::from_shape_fn((n, 2), |(i, j)| ((i * 7 + j * 3) % 5) as f64 - 2.0);
    let mut cov = Covariates::new();
    cov.push("x", Column::Numeric((0..n).map(|i| (i % 9) as f64).collect())).unwrap();
    let data = Dataset::new(y, cov).unwrap();
    let mut spec = ModelSpec::with_all(Family::Gaussian2, vec![BaseLearnerSpec::linear("x")]);
    spec.nu = 1.0;
    spec.m_max = 5000;
    spec.stop_on_no_improvement = true;
    let model = fit(&spec, &data, None).unwrap();
    assert!(model.iterations_run < 5000, "ran {}", model.iterations_run);
    assert!(model.train_risk.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn specification_errors() {
    let sc = small(ScenarioId::PoisLinear, 9);
    let mut spec = sc.default_model();
    spec.nu = 0.0;
    assert!(fit(&spec, &sc.train.data, None).is_err());
    let mut spec = sc.default_model();
    spec.learners.pop();
    assert!(fit(&spec, &sc.train.data, None).is_err());
    let spec = ModelSpec::with_all(Family::Poisson2, vec![BaseLearnerSpec::linear("nope")]);
    assert!(fit(&spec, &sc.train.data, None).is_err());
    // binary family on count data
    let spec = ModelSpec::with_all(Family::Bernoulli2, vec![BaseLearnerSpec::linear("x1")]);
    assert!(fit(&spec, &sc.train.data, None).is_err());
}

#[test]
fn selection_table_counts_history_up_to_the_stop() {
    let sc = small(ScenarioId::BernLinearLow, 10);
    let model = fit(&with_m(sc.default_model(), 200), &sc.train.data, Some(&sc.validation.data)).unwrap();
    let total: usize = model.selection_table().iter().map(|s| s.count).sum();
    assert_eq!(total, model.m_star);
    for s in model.selection_table() {
        assert!(model.is_selected(s.parameter, s.learner));
    }
}

#[test]
fn never_selected_effects_are_zero() {
    let sc = small(ScenarioId::BernLinearLow, 11);
    let model = fit(&with_m(sc.default_model(), 20), &sc.train.data, None).unwrap();
    let mut zero_found = false;
    for (p, list) in model.learners.iter().enumerate() {
        for j in 0..list.len() {
            if !model.is_selected(p, j) {
                let grid = model.effect_grid(p, j, 25).unwrap();
                assert_eq!(grid.len(), 25);
                assert!(grid.iter().all(|(_, e)| *e == 0.0));
                zero_found = true;
            }
        }
    }
    assert!(zero_found);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chosen_update_has_the_smallest_candidate_risk(seed in 0u64..1000, nu in 0.05f64..1.0) {
        let sc = small(ScenarioId::PoisLinear, seed);
        let mut spec = with_m(sc.default_model(), 25);
        spec.nu = nu;
        fit_with_observer(&spec, &sc.train.data, None, |d| {
            let chosen = d.candidate_risks[d.chosen_parameter];
            assert!(d.candidate_risks.iter().all(|&r| chosen <= r));
            let rss = &d.rss[d.chosen_parameter];
            assert!(rss.iter().all(|&r| rss[d.chosen_learner] <= r));
        }).unwrap();
    }
}
