use thiserror::Error;

/// Errors produced anywhere in the fitting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("predictor value {value} exceeds saturation bound {bound} for {link} link")]
    Saturation {
        link: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("non-finite predictor value {0}")]
    NonFinitePredictor(f64),

    #[error("invalid response: {0}")]
    Domain(String),

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("covariate has a degenerate range [{min}, {max}]")]
    DegenerateRange { min: f64, max: f64 },

    #[error("target df {target} outside attainable range ({min:.6}, {max:.6})")]
    Calibration { target: f64, min: f64, max: f64 },

    #[error("invalid learner configuration: {0}")]
    LearnerConfig(String),

    #[error("unknown region label(s): {}", .0.join(", "))]
    UnknownRegion(Vec<String>),

    #[error("row {row}, column '{column}': {message}")]
    Load { row: usize, column: String, message: String },

    #[error("missing values in column '{column}' at row(s) {}", format_rows(.rows))]
    MissingValues { column: String, rows: Vec<usize> },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("all candidate risks are non-finite at iteration {iteration}")]
    NonFiniteRisk { iteration: usize },

    #[error("AUC undefined: labels contain a single class")]
    SingleClass,

    #[error("invalid model specification: {0}")]
    Spec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported model format version {found} (this build reads major version {supported})")]
    UnsupportedVersion { found: String, supported: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_row(self, row: usize) -> Error {
        Error::Row {
            row,
            source: Box::new(self),
        }
    }
}

fn format_rows(rows: &[usize]) -> String {
    const SHOWN: usize = 10;
    let mut s: Vec<String> = rows.iter().take(SHOWN).map(|r| r.to_string()).collect();
    if rows.len() > SHOWN {
        s.push(format!("... ({} more)", rows.len() - SHOWN));
    }
    s.join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
