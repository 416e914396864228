use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::engine::FittedModel;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "bivboost-model";
/// Major.minor; readers accept any minor revision of their major version.
pub const MODEL_FORMAT_VERSION: &str = "1.0";

#[derive(Serialize)]
struct Envelope<'a> {
    format: &'a str,
    version: &'a str,
    model: &'a FittedModel,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: String,
}

#[derive(Deserialize)]
struct Owned {
    model: FittedModel,
}

fn major(version: &str) -> Option<u32> {
    version.split('.').next()?.parse().ok()
}

pub fn model_to_json(model: &FittedModel) -> Result<String> {
    Ok(serde_json::to_string(&Envelope {
        format: MODEL_FORMAT,
        version: MODEL_FORMAT_VERSION,
        model,
    })?)
}

pub fn model_from_json(text: &str) -> Result<FittedModel> {
    let header: Header = serde_json::from_str(text).map_err(|e| Error::Parse(format!("not a model file: {e}")))?;
    if header.format != MODEL_FORMAT {
        return Err(Error::Parse(format!("not a model file (format '{}')", header.format)));
    }
    let supported = major(MODEL_FORMAT_VERSION).expect("valid built-in version");
    if major(&header.version) != Some(supported) {
        return Err(Error::UnsupportedVersion {
            found: header.version,
            supported,
        });
    }
    let owned: Owned = serde_json::from_str(text)?;
    Ok(owned.model)
}

pub fn save_model(path: impl AsRef<Path>, model: &FittedModel) -> Result<()> {
    std::fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FittedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read model {}: {e}", path.display())))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn versions() {
        assert_eq!(major("1.0"), Some(1));
        assert_eq!(major("2.3"), Some(2));
        assert_eq!(major("x"), None);
        let err = model_from_json(r#"{"format":"bivboost-model","version":"2.0","model":{}}"#).unwrap_err();
        assert!(matches!(err, Error::UnsupportedVersion { supported: 1, .. }));
        assert!(model_from_json(r#"{"format":"other","version":"1.0"}"#).is_err());
    }
}
