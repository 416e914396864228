use std::path::Path;
use std::process::{Command, Output};

use bivboost::io::{load_csv, parse_config};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bivboost"));
    c.env_remove("BIVBOOST_SEED").env_remove("BIVBOOST_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, scenario: &str, seed: &str) {
    ok(&[
        "simulate", scenario, "--seed", seed, "-o", s(dir), "--n-train", "200", "--n-val", "200", "--n-test", "50", "--grid", "4x4",
    ]);
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn simulate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate(a.path(), "gauss_spatial", "5");
    simulate(b.path(), "gauss_spatial", "5");
    for f in ["train.csv", "validation.csv", "test.csv", "truth.json", "adjacency.csv", "config.toml"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn seed_comes_from_the_environment() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate(a.path(), "pois_linear", "9");
    let out = bin()
        .env("BIVBOOST_SEED", "9")
        .args(["simulate", "pois_linear", "-o", s(b.path()), "--n-train", "200", "--n-val", "200", "--n-test", "50"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let read = |d: &Path| std::fs::read(d.join("train.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn fit_then_predict_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "pois_linear", "3");
    let model = d.join("model.json");
    ok(&["fit", "--config", s(&d.join("config.toml")), "--train", s(&d.join("train.csv")), "-o", s(&model), "--m-max", "150"]);
    assert!(d.join("model.trace.csv").exists());
    let pred = d.join("pred.csv");
    ok(&["--threads", "2", "predict", "--model", s(&model), "--data", s(&d.join("train.csv")), "-o", s(&pred)]);
    let (header, rows) = read_csv(&pred);
    assert_eq!(header[..3], ["eta_lambda1", "eta_lambda2", "eta_lambda3"]);
    assert_eq!(header.last().unwrap(), "mean2");

    let cfg = parse_config(d.join("config.toml")).unwrap();
    let train = load_csv(d.join("train.csv"), &cfg.schema()).unwrap();
    let validation = load_csv(d.join("validation.csv"), &cfg.schema()).unwrap();
    let mut spec = cfg.model_spec(&train.covariates).unwrap();
    spec.m_max = 150;
    let lib = bivboost::fit(&spec, &train, Some(&validation)).unwrap();
    let eta = lib.train_eta.as_ref().unwrap();
    assert_eq!(rows.len(), eta.nrows());
    for (i, row) in rows.iter().enumerate() {
        for k in 0..3 {
            let v: f64 = row[k].parse().unwrap();
            assert!((v - eta[[i, k]]).abs() < 1e-10, "row {i} col {k}");
        }
    }

    let (trace_header, trace) = read_csv(&d.join("model.trace.csv"));
    assert_eq!(trace_header, ["iteration", "parameter", "learner", "train_risk", "validation_risk"]);
    assert_eq!(trace.len(), lib.iterations_run + 1);
    assert_eq!(trace[0][2], "offset");
}

#[test]
fn score_freqs_and_effects_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "bern_linear_low", "4");
    let model = d.join("m.json");
    ok(&["fit", "--config", s(&d.join("config.toml")), "--train", s(&d.join("train.csv")), "-o", s(&model), "--m-max", "40"]);

    let out = ok(&["score", "--model", s(&model), "--data", s(&d.join("test.csv")), "--mc-samples", "50"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("metric,margin,value"), "{header}");
    assert!(text.contains("auc,1,"));
    assert!(text.contains("energy,joint,"));
    let json = ok(&["score", "--model", s(&model), "--data", s(&d.join("test.csv")), "--metrics", "nll", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["rows"][0]["metric"], "nll");

    let freqs = d.join("freqs.csv");
    ok(&["freqs", "--model", s(&model), "-o", s(&freqs)]);
    let (header, rows) = read_csv(&freqs);
    assert_eq!(header, ["parameter", "learner", "count", "share"]);
    assert_eq!(rows.len(), 3 * 10);
    let total: usize = rows.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    assert!(total > 0 && total <= 40);

    // with 40 iterations over 30 candidates some learner is never chosen; its effect file is all zeros
    let eff = d.join("effects");
    ok(&["effects", "--model", s(&model), "-o", s(&eff), "--points", "11"]);
    let (_, index) = read_csv(&eff.join("effects_index.csv"));
    let unselected = index.iter().find(|r| r[3] == "false").expect("some learner never selected");
    let (_, values) = read_csv(&eff.join(&unselected[4]));
    assert_eq!(values.len(), 11);
    assert!(values.iter().all(|r| r[1].parse::<f64>().unwrap() == 0.0));
    let selected = index.iter().find(|r| r[3] == "true").unwrap();
    let (_, values) = read_csv(&eff.join(&selected[4]));
    assert!(values.iter().any(|r| r[1].parse::<f64>().unwrap() != 0.0));
}

#[test]
fn errors_are_single_prefixed_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["predict".into(), "--model".into(), dir.path().join("missing.json").display().to_string(), "--data".into(), "x.csv".into()],
        vec!["simulate".into(), "no_such_scenario".into(), "-o".into(), dir.path().display().to_string()],
        vec!["fit".into(), "--bogus".into()],
        vec!["simulate".into(), "pois_linear".into(), "--p".into(), "2".into(), "-o".into(), dir.path().display().to_string()],
    ];
    for args in cases {
        let out = bin().args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?} succeeded");
        let err = String::from_utf8(out.stderr).unwrap();
        let lines: Vec<&str> = err.lines().collect();
        assert_eq!(lines.len(), 1, "{args:?}: {err}");
        assert!(lines[0].starts_with("ERROR: "), "{err}");
    }
}

#[test]
fn bad_response_values_name_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "bern_linear_low", "6");
    let train = std::fs::read_to_string(d.join("train.csv")).unwrap();
    let mut lines: Vec<String> = train.lines().map(String::from).collect();
    // third data row gets a response of 2
    let fields: Vec<&str> = lines[3].splitn(2, ',').collect();
    lines[3] = format!("2,{}", fields[1]);
    std::fs::write(d.join("bad.csv"), lines.join("\n")).unwrap();
    let out = run(&["fit", "--config", s(&d.join("config.toml")), "--train", s(&d.join("bad.csv")), "-o", s(&d.join("m.json"))]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("ERROR: ") && err.contains("row 3") && err.contains("y1"), "{err}");
}
