//! Files in and out: CSV tables, TOML model configuration, versioned model
//! files and region edge lists.

mod config;
mod model_file;
mod table;

pub use config::{parse_config, parse_config_str, render_config, LearnerEntry, ModelConfig, ParameterConfig, ValidationConfig};
pub use model_file::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use table::{load_covariates, load_csv, read_csv, write_table, Schema, MISSING_TOKENS};

use std::path::Path;

use crate::error::{Error, Result};
use crate::learners::Adjacency;

/// Reads a "regionA,regionB" edge list.
pub fn load_adjacency(path: impl AsRef<Path>) -> Result<Adjacency> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read adjacency file {}: {e}", path.display())))?;
    Adjacency::parse_edge_list(&text)
}

pub fn write_adjacency(path: impl AsRef<Path>, adjacency: &Adjacency) -> Result<()> {
    std::fs::write(path, adjacency.to_edge_list())?;
    Ok(())
}

/// Serde helpers for risk traces, which may hold infinities that plain JSON numbers cannot.
pub(crate) mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else if v.is_nan() {
            Repr::Text("nan".into())
        } else if v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("invalid number '{other}'"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|xs| xs.iter().map(|&x| to_repr(x)).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
        let raw: Option<Vec<Repr>> = Option::deserialize(d)?;
        raw.map(|xs| xs.into_iter().map(from_repr).collect()).transpose()
    }
}
