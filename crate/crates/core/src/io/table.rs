use ndarray::{Array2, ArrayView2};
use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::{Column, Covariates, Dataset};
use crate::error::{Error, Result};
use crate::family::Family;

/// Cell contents treated as missing.
pub const MISSING_TOKENS: [&str; 5] = ["", "NA", "NaN", "nan", "null"];

/// Which columns to read and how to type them.
#[derive(Debug, Clone, Default)]
pub struct Schema {
    /// Response column pair; required by [`load_csv`], ignored by [`load_covariates`].
    pub responses: Option<[String; 2]>,
    /// Covariate columns to load; `None` loads every non-response column.
    pub covariates: Option<Vec<String>>,
    /// Columns read as labels rather than numbers.
    pub categorical: Vec<String>,
    /// Checks response values against the family's support.
    pub family: Option<Family>,
}

impl Schema {
    pub fn new(responses: [&str; 2]) -> Self {
        Self {
            responses: Some(responses.map(String::from)),
            ..Self::default()
        }
    }

    pub fn family(mut self, family: Family) -> Self {
        self.family = Some(family);
        self
    }

    pub fn categorical<S: Into<String>>(mut self, columns: impl IntoIterator<Item = S>) -> Self {
        self.categorical = columns.into_iter().map(Into::into).collect();
        self
    }

    pub fn covariates<S: Into<String>>(mut self, columns: impl IntoIterator<Item = S>) -> Self {
        self.covariates = Some(columns.into_iter().map(Into::into).collect());
        self
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(Error::Schema("missing header row".into()));
        }
        let mut seen = HashSet::new();
        for h in &header {
            if !seen.insert(h) {
                return Err(Error::Schema(format!("duplicate column '{h}'")));
            }
        }
        let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { header, rows })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    }

    fn cells(&self, column: usize) -> impl Iterator<Item = (usize, &str)> {
        // data rows are numbered from 1, the header not counted
        self.rows
            .iter()
            .enumerate()
            .map(move |(i, r)| (i + 1, r.get(column).unwrap_or("").trim()))
    }

    fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.index(name)?;
        let mut values = Vec::with_capacity(self.rows.len());
        let mut missing = Vec::new();
        for (row, cell) in self.cells(c) {
            if MISSING_TOKENS.contains(&cell) {
                missing.push(row);
                values.push(f64::NAN);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Load {
                row,
                column: name.to_string(),
                message: format!("cannot parse '{cell}' as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Load {
                    row,
                    column: name.to_string(),
                    message: format!("non-finite value '{cell}'"),
                });
            }
            values.push(v);
        }
        if !missing.is_empty() {
            return Err(Error::MissingValues {
                column: name.to_string(),
                rows: missing,
            });
        }
        Ok(values)
    }

    fn categorical(&self, name: &str) -> Result<Vec<String>> {
        let c = self.index(name)?;
        let missing: Vec<usize> = self.cells(c).filter(|(_, v)| MISSING_TOKENS.contains(v)).map(|(r, _)| r).collect();
        if !missing.is_empty() {
            return Err(Error::MissingValues {
                column: name.to_string(),
                rows: missing,
            });
        }
        Ok(self.cells(c).map(|(_, v)| v.to_string()).collect())
    }

    fn covariates(&self, schema: &Schema, exclude: &[String]) -> Result<Covariates> {
        let names: Vec<String> = match &schema.covariates {
            Some(list) => list.clone(),
            None => self.header.iter().filter(|h| !exclude.contains(h)).cloned().collect(),
        };
        let mut cov = Covariates::with_rows(self.rows.len());
        for name in names {
            let column = if schema.categorical.contains(&name) {
                Column::Categorical(self.categorical(&name)?)
            } else {
                Column::Numeric(self.numeric(&name)?)
            };
            cov.push(name, column)?;
        }
        Ok(cov)
    }
}

/// Parses a header-first, comma-separated table into a dataset.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let table = Table::read(reader)?;
    let responses = schema
        .responses
        .clone()
        .ok_or_else(|| Error::Schema("no response columns given".into()))?;
    let y1 = table.numeric(&responses[0])?;
    let y2 = table.numeric(&responses[1])?;
    if let Some(family) = schema.family {
        for (column, values) in [(&responses[0], &y1), (&responses[1], &y2)] {
            for (i, &v) in values.iter().enumerate() {
                // every family's support is a product of per-margin supports
                if let Err(e) = family.validate_response([v, v]) {
                    return Err(Error::Load {
                        row: i + 1,
                        column: column.clone(),
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    let covariates = table.covariates(schema, &responses)?;
    let n = y1.len();
    let mut y = Array2::zeros((n, 2));
    for i in 0..n {
        y[[i, 0]] = y1[i];
        y[[i, 1]] = y2[i];
    }
    Dataset::new(y, covariates)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Schema(format!("cannot open {}: {e}", path.display())))
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    read_csv(open(path.as_ref())?, schema)
}

/// Covariates only, for prediction on data without responses.
pub fn load_covariates(path: impl AsRef<Path>, schema: &Schema) -> Result<Covariates> {
    let table = Table::read(open(path.as_ref())?)?;
    let exclude: Vec<String> = schema.responses.clone().map(Vec::from).unwrap_or_default();
    table.covariates(schema, &exclude)
}

/// Writes named numeric columns followed by the dataset's covariates.
pub fn write_table<W: Write>(out: W, numeric: &[(String, ArrayView2<f64>)], covariates: Option<&Covariates>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = Vec::new();
    let mut n = None;
    for (prefix, m) in numeric {
        n = Some(m.nrows());
        header.extend((0..m.ncols()).map(|j| if m.ncols() == 1 { prefix.clone() } else { format!("{prefix}{}", j + 1) }));
    }
    if let Some(c) = covariates {
        n = Some(c.nrows());
        header.extend(c.names().iter().cloned());
    }
    w.write_record(&header)?;
    for i in 0..n.unwrap_or(0) {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for (_, m) in numeric {
            rec.extend(m.row(i).iter().map(|v| v.to_string()));
        }
        if let Some(c) = covariates {
            for (_, col) in c.iter() {
                rec.push(match col {
                    Column::Numeric(v) => v[i].to_string(),
                    Column::Categorical(v) => v[i].clone(),
                });
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, schema: &Schema) -> Result<Dataset> {
        read_csv(text.as_bytes(), schema)
    }

    #[test]
    fn two_rows_round_trip() {
        let text = "y1,y2,x,region\n1,0,0.125,a\n0,1,-3.5e-7,b\n";
        let schema = Schema::new(["y1", "y2"]).family(Family::Bernoulli2).categorical(["region"]);
        let d = parse(text, &schema).unwrap();
        assert_eq!(d.response(0), [1.0, 0.0]);
        assert_eq!(d.covariates.numeric("x").unwrap(), &[0.125, -3.5e-7]);
        assert_eq!(d.covariates.categorical("region").unwrap(), &["a".to_string(), "b".to_string()]);
        let mut buf = Vec::new();
        write_table(&mut buf, &[("y".into(), d.responses.view())], Some(&d.covariates)).unwrap();
        let back = parse(&String::from_utf8(buf).unwrap(), &schema).unwrap();
        assert_eq!(back.responses, d.responses);
        assert_eq!(back.covariates, d.covariates);
    }

    #[test]
    fn invalid_binary_response_names_row_and_column() {
        let text = "y1,y2,x\n1,0,1\n0,2,2\n";
        let err = parse(text, &Schema::new(["y1", "y2"]).family(Family::Bernoulli2)).unwrap_err();
        match err {
            Error::Load { row, column, .. } => assert_eq!((row, column.as_str()), (2, "y2")),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unparsable_cell() {
        let err = parse("y1,y2,x\n1,2,abc\n", &Schema::new(["y1", "y2"])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1") && msg.contains("'x'") && msg.contains("abc"), "{msg}");
    }

    #[test]
    fn missing_values_list_rows() {
        let err = parse("y1,y2,x\n1,2,\n1,2,3\n1,2,NA\n", &Schema::new(["y1", "y2"])).unwrap_err();
        match err {
            Error::MissingValues { column, rows } => {
                assert_eq!(column, "x");
                assert_eq!(rows, vec![1, 3]);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_and_unused_columns() {
        let schema = Schema::new(["y1", "y2"]).covariates(["x"]);
        assert!(matches!(parse("y1,y2,z\n1,2,3\n", &schema), Err(Error::Schema(_))));
        // unused text columns are never parsed
        let d = parse("y1,y2,x,note\n1,2,3,hello\n", &schema).unwrap();
        assert_eq!(d.covariates.names(), &["x".to_string()]);
    }
}
