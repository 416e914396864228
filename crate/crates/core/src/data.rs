//! In-memory tables: named covariate columns plus the n×2 response matrix.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::family::Family;

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&i| v[i]).collect()),
            Column::Categorical(v) => Column::Categorical(rows.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Covariates {
    names: Vec<String>,
    columns: Vec<Column>,
    nrows: usize,
}

impl Covariates {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_rows(nrows: usize) -> Self {
        Self {
            nrows,
            ..Self::default()
        }
    }

    pub fn push(&mut self, name: impl Into<String>, column: Column) -> Result<()> {
        let name = name.into();
        if self.names.is_empty() && self.nrows == 0 {
            self.nrows = column.len();
        }
        if column.len() != self.nrows {
            return Err(Error::Schema(format!(
                "column '{name}' has {} rows, expected {}",
                column.len(),
                self.nrows
            )));
        }
        if self.names.contains(&name) {
            return Err(Error::Schema(format!("duplicate column '{name}'")));
        }
        self.names.push(name);
        self.columns.push(column);
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<&Column> {
        self.names.iter().position(|n| n == name).map(|i| &self.columns[i])
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.get(name) {
            Some(Column::Numeric(v)) => Ok(v),
            Some(Column::Categorical(_)) => Err(Error::Schema(format!("column '{name}' is categorical, expected numeric"))),
            None => Err(Error::Schema(format!("missing column '{name}'"))),
        }
    }

    pub fn categorical(&self, name: &str) -> Result<&[String]> {
        match self.get(name) {
            Some(Column::Categorical(v)) => Ok(v),
            Some(Column::Numeric(_)) => Err(Error::Schema(format!("column '{name}' is numeric, expected categorical"))),
            None => Err(Error::Schema(format!("missing column '{name}'"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.names.iter().map(String::as_str).zip(self.columns.iter())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Covariates {
        Covariates {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            nrows: rows.len(),
        }
    }
}

/// Responses and covariates for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub responses: Array2<f64>,
    pub covariates: Covariates,
}

impl Dataset {
    pub fn new(responses: Array2<f64>, covariates: Covariates) -> Result<Self> {
        if responses.ncols() != 2 {
            return Err(Error::Schema(format!(
                "responses must have 2 columns, got {}",
                responses.ncols()
            )));
        }
        if !covariates.names().is_empty() && covariates.nrows() != responses.nrows() {
            return Err(Error::Schema(format!(
                "{} response rows vs {} covariate rows",
                responses.nrows(),
                covariates.nrows()
            )));
        }
        let covariates = if covariates.names().is_empty() {
            Covariates::with_rows(responses.nrows())
        } else {
            covariates
        };
        Ok(Self {
            responses,
            covariates,
        })
    }

    pub fn nrows(&self) -> usize {
        self.responses.nrows()
    }

    pub fn response(&self, i: usize) -> [f64; 2] {
        [self.responses[[i, 0]], self.responses[[i, 1]]]
    }

    pub fn validate_for(&self, family: Family) -> Result<()> {
        for i in 0..self.nrows() {
            family.validate_response(self.response(i)).map_err(|e| e.at_row(i))?;
        }
        Ok(())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            responses: self.responses.select(Axis(0), rows),
            covariates: self.covariates.select_rows(rows),
        }
    }

    /// Random (rest, held-out) split with `round(fraction · n)` held-out rows, row order kept.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        let n = self.nrows();
        let held = (fraction * n as f64).round() as usize;
        if !(fraction > 0.0 && fraction < 1.0) || held == 0 || held == n {
            return Err(Error::Spec(format!("cannot hold out a fraction {fraction} of {n} rows")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut out = order.split_off(n - held);
        order.sort_unstable();
        out.sort_unstable();
        Ok((self.select_rows(&order), self.select_rows(&out)))
    }
}
