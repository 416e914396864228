use anyhow::{bail, Context, Result};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bivboost::engine::fit_with_observer;
use bivboost::io::{self, load_covariates, load_csv, load_model, render_config, save_model, write_table, Schema, ValidationConfig};
use bivboost::learners::LearnerKind;
use bivboost::scoring::{score_model, Metric, ScoreOptions};
use bivboost::simulate::{make_scenario, ScenarioId, ScenarioSpec, REGION_COLUMN};
use bivboost::FittedModel;

use crate::{EffectsArgs, FitArgs, Format, FreqsArgs, PredictArgs, ScoreArgs, SimulateArgs};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

/// A file when given, stdout otherwise.
fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn default_trace_path(model: &Path) -> PathBuf {
    let stem = model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    model.with_file_name(format!("{stem}.trace.csv"))
}

pub fn fit(args: FitArgs) -> Result<()> {
    let config = io::parse_config(&args.config)?;
    let schema = config.schema();
    let train = load_csv(&args.train, &schema).with_context(|| format!("training data {}", args.train.display()))?;
    let (train, validation) = match (&args.validation, &config.validation) {
        (Some(path), _) | (None, Some(ValidationConfig::File(path))) => {
            let v = load_csv(path, &schema).with_context(|| format!("validation data {}", path.display()))?;
            (train, Some(v))
        }
        (None, Some(ValidationConfig::Fraction(f))) => {
            let (t, v) = train.split(*f, args.seed.unwrap_or(config.seed))?;
            (t, Some(v))
        }
        (None, None) => (train, None),
    };
    let mut spec = config.model_spec(&train.covariates)?;
    if let Some(m) = args.m_max {
        spec.m_max = m;
    }
    let every = (spec.m_max / 10).max(1);
    let mut model = fit_with_observer(&spec, &train, validation.as_ref(), |d| {
        if d.iteration % every == 0 {
            log::info!("iteration {}: risk {:.6}", d.iteration, d.candidate_risks[d.chosen_parameter]);
        }
    })?;
    model.response_names = Some(config.responses.clone());
    save_model(&args.out, &model)?;
    let trace = args.trace.clone().unwrap_or_else(|| default_trace_path(&args.out));
    write_trace(&trace, &model)?;
    eprintln!(
        "fitted {} iterations, stopping iteration {}, training risk {:.4}{}",
        model.iterations_run,
        model.m_star,
        model.train_risk[model.m_star],
        model
            .validation_risk
            .as_ref()
            .map(|v| format!(", validation risk {:.4}", v[model.m_star]))
            .unwrap_or_default()
    );
    Ok(())
}

fn write_trace(path: &Path, model: &FittedModel) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["iteration", "parameter", "learner", "train_risk", "validation_risk"])?;
    let names = model.spec.family.parameter_names();
    let val = |m: usize| model.validation_risk.as_ref().map(|v| v[m].to_string()).unwrap_or_default();
    w.write_record(["0", "", "offset", &model.train_risk[0].to_string(), &val(0)])?;
    for h in &model.history {
        w.write_record([
            h.iteration.to_string(),
            names[h.parameter].to_string(),
            model.learners[h.parameter][h.learner].spec.label(),
            model.train_risk[h.iteration].to_string(),
            val(h.iteration),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Covariates the model reads, with region columns marked categorical.
fn model_schema(model: &FittedModel, responses: Option<[String; 2]>) -> Schema {
    let categorical: Vec<String> = model
        .learners
        .iter()
        .flatten()
        .filter(|l| matches!(l.spec.kind, LearnerKind::Mrf(_)))
        .map(|l| l.spec.covariate.clone())
        .collect();
    Schema {
        responses,
        covariates: Some(model.required_covariates()),
        categorical,
        family: Some(model.spec.family),
    }
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let mut schema = model_schema(&model, None);
    schema.categorical.extend(args.categorical);
    let covariates = load_covariates(&args.data, &schema).with_context(|| format!("data {}", args.data.display()))?;
    let pred = model.predict(&covariates)?;
    let family = model.spec.family;
    let mut w = csv::Writer::from_writer(output(&args.out)?);
    let names = family.parameter_names();
    let mut header: Vec<String> = names.iter().map(|n| format!("eta_{n}")).collect();
    header.extend(names.iter().map(|n| n.to_string()));
    header.extend(["mean1".to_string(), "mean2".to_string()]);
    w.write_record(&header)?;
    for i in 0..pred.eta.nrows() {
        let rec: Vec<String> = pred
            .eta
            .row(i)
            .iter()
            .chain(pred.params.row(i).iter())
            .chain(pred.means.row(i).iter())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn score(args: ScoreArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let responses: [String; 2] = match (args.responses, &model.response_names) {
        (Some(r), _) => [r[0].clone(), r[1].clone()],
        (None, Some(r)) => r.clone(),
        (None, None) => bail!("the model does not record its response columns; pass --responses"),
    };
    let mut schema = model_schema(&model, Some(responses));
    schema.categorical.extend(args.categorical);
    let data = load_csv(&args.data, &schema).with_context(|| format!("data {}", args.data.display()))?;
    let metrics = args
        .metrics
        .map(|m| m.iter().map(|s| s.parse::<Metric>()).collect::<bivboost::Result<Vec<_>>>())
        .transpose()?;
    let opts = ScoreOptions {
        metrics,
        mc_samples: args.mc_samples,
        seed: args.seed,
    };
    let report = score_model(&model, &data, &opts)?;
    let mut out = output(&args.out)?;
    match args.format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s.split_once(['x', 'X']).context("grid must look like ROWSxCOLS")?;
    Ok((r.trim().parse().context("grid rows")?, c.trim().parse().context("grid columns")?))
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let id: ScenarioId = args.scenario.parse()?;
    let mut spec = ScenarioSpec::new(id, args.seed);
    if let Some(p) = args.p {
        spec.p = p;
    }
    if let Some(n) = args.n_train {
        spec.n_train = n;
    }
    if let Some(n) = args.n_val {
        spec.n_val = n;
    }
    if let Some(n) = args.n_test {
        spec.n_test = n;
    }
    if let Some(g) = &args.grid {
        spec.grid = parse_grid(g)?;
    }
    let scenario = make_scenario(&spec)?;
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (name, sample) in [("train", &scenario.train), ("validation", &scenario.validation), ("test", &scenario.test)] {
        write_table(
            create(&dir.join(format!("{name}.csv")))?,
            &[("y".into(), sample.data.responses.view())],
            Some(&sample.data.covariates),
        )?;
    }
    let mut truth = create(&dir.join("truth.json"))?;
    serde_json::to_writer_pretty(&mut truth, &scenario.truth)?;
    writeln!(truth)?;
    truth.flush()?;
    let categorical: Vec<&str> = if scenario.map.is_some() { vec![REGION_COLUMN] } else { vec![] };
    if let Some(map) = &scenario.map {
        io::write_adjacency(dir.join("adjacency.csv"), &map.adjacency)?;
    }
    let config = render_config(
        &scenario.default_model(),
        ["y1", "y2"],
        &categorical,
        scenario.map.as_ref().map(|_| "adjacency.csv"),
        Some("validation.csv"),
    );
    std::fs::write(dir.join("config.toml"), config)?;
    eprintln!("wrote {} scenario (seed {}) to {}", id, args.seed, dir.display());
    Ok(())
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

pub fn effects(args: EffectsArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let names = model.spec.family.parameter_names();
    let mut index = csv::Writer::from_writer(create(&args.out_dir.join("effects_index.csv"))?);
    index.write_record(["parameter", "learner", "covariate", "selected", "file"])?;
    for (p, list) in model.learners.iter().enumerate() {
        for (j, l) in list.iter().enumerate() {
            let file = format!("{}_{}_{}.csv", names[p], l.spec.kind_name(), file_safe(&l.spec.covariate));
            let grid = model.effect_grid(p, j, args.points)?;
            let mut w = csv::Writer::from_writer(create(&args.out_dir.join(&file))?);
            w.write_record([l.spec.covariate.as_str(), "effect"])?;
            for (x, e) in grid {
                w.write_record([x, e.to_string()])?;
            }
            w.flush()?;
            index.write_record([
                names[p],
                &l.spec.label(),
                &l.spec.covariate,
                if model.is_selected(p, j) { "true" } else { "false" },
                &file,
            ])?;
        }
    }
    index.flush()?;
    Ok(())
}

pub fn freqs(args: FreqsArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let counts = bivboost::engine::selection_frequencies(model.selected_history());
    let names = model.spec.family.parameter_names();
    let total = model.m_star.max(1) as f64;
    let mut w = csv::Writer::from_writer(output(&args.out)?);
    w.write_record(["parameter", "learner", "count", "share"])?;
    for (p, list) in model.learners.iter().enumerate() {
        for (j, l) in list.iter().enumerate() {
            let c = counts.get(&(p, j)).copied().unwrap_or(0);
            w.write_record([names[p].to_string(), l.spec.label(), c.to_string(), (c as f64 / total).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

