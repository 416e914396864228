use serde::Deserialize;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::load_adjacency;
use super::table::Schema;
use crate::data::{Column, Covariates};
use crate::engine::{ModelSpec, OffsetMode, Stabilization, DEFAULT_M_MAX, DEFAULT_NU};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::learners::{Adjacency, BaseLearnerSpec, LearnerKind, MrfConfig, PSplineConfig, DEFAULT_MRF_DF};

/// One learner as written in a config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerEntry {
    pub covariate: String,
    /// linear (default), pspline or mrf.
    pub kind: Option<String>,
    pub df: Option<f64>,
    pub n_knots: Option<usize>,
    pub degree: Option<usize>,
    pub diff_order: Option<usize>,
    /// Edge-list file for mrf learners, relative to the config file.
    pub adjacency: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameter {
    learners: Option<Vec<LearnerEntry>>,
    fixed: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidation {
    file: Option<String>,
    fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    family: String,
    responses: [String; 2],
    covariates: Option<Vec<String>>,
    #[serde(default)]
    categorical: Vec<String>,
    nu: Option<f64>,
    m_max: Option<usize>,
    offsets: Option<OffsetMode>,
    stabilization: Option<Stabilization>,
    #[serde(default)]
    independence: bool,
    #[serde(default)]
    stop_on_no_improvement: bool,
    seed: Option<u64>,
    validation: Option<RawValidation>,
    learners: Option<Vec<LearnerEntry>>,
    #[serde(default)]
    parameters: BTreeMap<String, RawParameter>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationConfig {
    File(PathBuf),
    /// Share of the training rows held out, drawn with the config seed.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterConfig {
    /// `None` falls back to the config-wide learner list.
    pub learners: Option<Vec<BaseLearnerSpec>>,
    pub fixed: Option<f64>,
}

/// A validated model configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub family: Family,
    pub responses: [String; 2],
    pub covariates: Option<Vec<String>>,
    pub categorical: Vec<String>,
    pub nu: f64,
    pub m_max: usize,
    pub offsets: OffsetMode,
    pub stabilization: Stabilization,
    pub independence: bool,
    pub stop_on_no_improvement: bool,
    pub seed: u64,
    pub validation: Option<ValidationConfig>,
    /// Learners for every parameter without its own list; `None` means
    /// linear learners on all numeric covariates.
    pub learners: Option<Vec<BaseLearnerSpec>>,
    /// Indexed like the family's parameters.
    pub parameters: Vec<ParameterConfig>,
}

fn resolve_learner(entry: &LearnerEntry, base_dir: &Path, cache: &mut HashMap<PathBuf, Adjacency>) -> Result<BaseLearnerSpec> {
    let kind = entry.kind.as_deref().unwrap_or("linear");
    let reject = |key: &str, present: bool| -> Result<()> {
        if present {
            Err(Error::Config(format!("learner for '{}': option '{key}' does not apply to {kind} learners", entry.covariate)))
        } else {
            Ok(())
        }
    };
    let spline_opts = [
        ("n_knots", entry.n_knots.is_some()),
        ("degree", entry.degree.is_some()),
        ("diff_order", entry.diff_order.is_some()),
    ];
    match kind {
        "linear" => {
            reject("df", entry.df.is_some())?;
            reject("adjacency", entry.adjacency.is_some())?;
            for (k, p) in spline_opts {
                reject(k, p)?;
            }
            Ok(BaseLearnerSpec::linear(&entry.covariate))
        }
        "pspline" => {
            reject("adjacency", entry.adjacency.is_some())?;
            let d = PSplineConfig::default();
            let cfg = PSplineConfig {
                n_knots: entry.n_knots.unwrap_or(d.n_knots),
                degree: entry.degree.unwrap_or(d.degree),
                diff_order: entry.diff_order.unwrap_or(d.diff_order),
                df: entry.df.unwrap_or(d.df),
            };
            cfg.validate().map_err(|e| Error::Config(format!("learner for '{}': {e}", entry.covariate)))?;
            Ok(BaseLearnerSpec::pspline_with(&entry.covariate, cfg))
        }
        "mrf" => {
            for (k, p) in spline_opts {
                reject(k, p)?;
            }
            let file = entry
                .adjacency
                .as_ref()
                .ok_or_else(|| Error::Config(format!("mrf learner for '{}' needs an 'adjacency' file", entry.covariate)))?;
            let path = base_dir.join(file);
            let adjacency = match cache.get(&path) {
                Some(a) => a.clone(),
                None => {
                    let a = load_adjacency(&path)?;
                    cache.insert(path, a.clone());
                    a
                }
            };
            let df = entry.df.unwrap_or(DEFAULT_MRF_DF);
            if !(df > 0.0) {
                return Err(Error::Config(format!("learner for '{}': df must be positive", entry.covariate)));
            }
            Ok(BaseLearnerSpec::mrf(&entry.covariate, adjacency, df))
        }
        other => Err(Error::Config(format!(
            "learner for '{}': unknown kind '{other}' (expected linear, pspline or mrf)",
            entry.covariate
        ))),
    }
}

/// Parses config text; relative file names resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ModelConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    let family: Family = raw.family.parse()?;
    let mut cache = HashMap::new();
    let mut resolve_list = |list: &Option<Vec<LearnerEntry>>| -> Result<Option<Vec<BaseLearnerSpec>>> {
        list.as_ref()
            .map(|l| l.iter().map(|e| resolve_learner(e, base_dir, &mut cache)).collect())
            .transpose()
    };
    let learners = resolve_list(&raw.learners)?;
    let mut parameters = vec![ParameterConfig::default(); family.n_params()];
    for (name, p) in &raw.parameters {
        let idx = family.parameter_index(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown parameter '{name}' for {family} (expected one of {})",
                family.parameter_names().join(", ")
            ))
        })?;
        if p.fixed.is_some() && p.learners.as_ref().is_some_and(|l| !l.is_empty()) {
            return Err(Error::Config(format!("parameter '{name}' is fixed but also lists learners")));
        }
        if let Some(v) = p.fixed {
            if !v.is_finite() {
                return Err(Error::Config(format!("parameter '{name}': fixed value must be finite")));
            }
        }
        parameters[idx] = ParameterConfig {
            learners: resolve_list(&p.learners)?,
            fixed: p.fixed,
        };
    }
    let validation = match raw.validation {
        None => None,
        Some(RawValidation { file: Some(f), fraction: None }) => Some(ValidationConfig::File(base_dir.join(f))),
        Some(RawValidation { file: None, fraction: Some(f) }) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("validation fraction must lie in (0, 1), got {f}")));
            }
            Some(ValidationConfig::Fraction(f))
        }
        Some(_) => return Err(Error::Config("validation needs exactly one of 'file' or 'fraction'".into())),
    };
    if raw.responses[0] == raw.responses[1] {
        return Err(Error::Config("the two response columns must differ".into()));
    }
    let config = ModelConfig {
        family,
        responses: raw.responses,
        covariates: raw.covariates,
        categorical: raw.categorical,
        nu: raw.nu.unwrap_or(DEFAULT_NU),
        m_max: raw.m_max.unwrap_or(DEFAULT_M_MAX),
        offsets: raw.offsets.unwrap_or_default(),
        stabilization: raw.stabilization.unwrap_or_default(),
        independence: raw.independence,
        stop_on_no_improvement: raw.stop_on_no_improvement,
        seed: raw.seed.unwrap_or(1),
        validation,
        learners,
        parameters,
    };
    if !(config.nu > 0.0 && config.nu <= 1.0) {
        return Err(Error::Config(format!("nu must lie in (0, 1], got {}", config.nu)));
    }
    Ok(config)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        e => e,
    })
}

impl ModelConfig {
    /// How training and test files should be read.
    pub fn schema(&self) -> Schema {
        Schema {
            responses: Some(self.responses.clone()),
            covariates: self.covariates.clone(),
            categorical: self.categorical.clone(),
            family: Some(self.family),
        }
    }

    /// Builds the engine specification, checking every learner against the data.
    pub fn model_spec(&self, data: &Covariates) -> Result<ModelSpec> {
        let default: Vec<BaseLearnerSpec> = match &self.learners {
            Some(l) => l.clone(),
            None => data
                .iter()
                .filter(|(_, c)| matches!(c, Column::Numeric(_)))
                .map(|(n, _)| BaseLearnerSpec::linear(n))
                .collect(),
        };
        let mut spec = ModelSpec::new(self.family);
        let names = self.family.parameter_names();
        for (p, pc) in self.parameters.iter().enumerate() {
            let list = match (&pc.learners, pc.fixed) {
                (_, Some(v)) => {
                    spec.fixed[p] = Some(v);
                    Vec::new()
                }
                (Some(l), None) => l.clone(),
                (None, None) => default.clone(),
            };
            for l in &list {
                let ok = match (data.get(&l.covariate), &l.kind) {
                    (None, _) => {
                        return Err(Error::Config(format!(
                            "parameter '{}': covariate '{}' is not in the data",
                            names[p], l.covariate
                        )))
                    }
                    (Some(Column::Categorical(_)), LearnerKind::Mrf(_)) => true,
                    (Some(Column::Numeric(_)), LearnerKind::Linear | LearnerKind::Pspline(_)) => true,
                    _ => false,
                };
                if !ok {
                    let want = if matches!(l.kind, LearnerKind::Mrf(_)) { "categorical" } else { "numeric" };
                    return Err(Error::Config(format!(
                        "parameter '{}': {} needs a {want} column",
                        names[p],
                        l.label()
                    )));
                }
            }
            spec.learners[p] = list;
        }
        if self.independence {
            spec = spec.independence();
        }
        spec.nu = self.nu;
        spec.m_max = self.m_max;
        spec.offsets = self.offsets;
        spec.stabilization = self.stabilization;
        spec.stop_on_no_improvement = self.stop_on_no_improvement;
        spec.validate()?;
        Ok(spec)
    }
}

fn render_learner(out: &mut String, l: &BaseLearnerSpec, adjacency_file: Option<&str>) {
    match &l.kind {
        LearnerKind::Linear => {
            let _ = write!(out, "  {{ covariate = \"{}\" }},", l.covariate);
        }
        LearnerKind::Pspline(c) => {
            let _ = write!(
                out,
                "  {{ covariate = \"{}\", kind = \"pspline\", df = {:?}, n_knots = {}, degree = {}, diff_order = {} }},",
                l.covariate, c.df, c.n_knots, c.degree, c.diff_order
            );
        }
        LearnerKind::Mrf(MrfConfig { df, .. }) => {
            let _ = write!(
                out,
                "  {{ covariate = \"{}\", kind = \"mrf\", adjacency = \"{}\", df = {df:?} }},",
                l.covariate,
                adjacency_file.unwrap_or("adjacency.csv")
            );
        }
    }
    out.push('\n');
}

fn render_list(out: &mut String, key: &str, list: &[BaseLearnerSpec], adjacency_file: Option<&str>) {
    let _ = writeln!(out, "{key} = [");
    for l in list {
        render_learner(out, l, adjacency_file);
    }
    out.push_str("]\n");
}

/// Config text that reproduces `spec` on data with the given response and
/// categorical columns.
pub fn render_config(
    spec: &ModelSpec,
    responses: [&str; 2],
    categorical: &[&str],
    adjacency_file: Option<&str>,
    validation_file: Option<&str>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "family = \"{}\"", spec.family);
    let _ = writeln!(out, "responses = [\"{}\", \"{}\"]", responses[0], responses[1]);
    if !categorical.is_empty() {
        let quoted: Vec<String> = categorical.iter().map(|c| format!("\"{c}\"")).collect();
        let _ = writeln!(out, "categorical = [{}]", quoted.join(", "));
    }
    let _ = writeln!(out, "nu = {:?}", spec.nu);
    let _ = writeln!(out, "m_max = {}", spec.m_max);
    let _ = writeln!(out, "offsets = \"{}\"", match spec.offsets {
        OffsetMode::Mle => "mle",
        OffsetMode::Zero => "zero",
    });
    let _ = writeln!(out, "stabilization = \"{}\"", match spec.stabilization {
        Stabilization::None => "none",
        Stabilization::Mad => "mad",
        Stabilization::L2 => "l2",
    });
    if spec.stop_on_no_improvement {
        out.push_str("stop_on_no_improvement = true\n");
    }
    let unfixed: Vec<usize> = (0..spec.learners.len()).filter(|&p| spec.fixed_value(p).is_none()).collect();
    let shared = unfixed.windows(2).all(|w| spec.learners[w[0]] == spec.learners[w[1]]);
    if shared {
        if let Some(&p) = unfixed.first() {
            render_list(&mut out, "learners", &spec.learners[p], adjacency_file);
        }
    }
    if let Some(v) = validation_file {
        let _ = write!(out, "\n[validation]\nfile = \"{v}\"\n");
    }
    for (p, name) in spec.family.parameter_names().iter().enumerate() {
        match spec.fixed_value(p) {
            Some(v) => {
                let _ = write!(out, "\n[parameters.{name}]\nfixed = {v:?}\n");
            }
            None if !shared => {
                let _ = write!(out, "\n[parameters.{name}]\n");
                render_list(&mut out, "learners", &spec.learners[p], adjacency_file);
            }
            None => {}
        }
    }
    out
}
