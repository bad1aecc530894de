//! Model persistence as versioned JSON.
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so a saved model reloads with bit-identical weights.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::features::{FeatureTemplate, Gazetteer};
use super::model::{parameter_count, CrfModel, FeatureDictionary};
use crate::corpus::BioTag;
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "protoner-crf";
pub const MODEL_VERSION: u32 = 1;

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    labels: Vec<BioTag>,
    templates: Vec<FeatureTemplate>,
    gazetteers: Vec<Gazetteer>,
    l2: f64,
    features: Vec<String>,
    weights: Vec<f64>,
}

pub fn save_model<W: Write>(model: &CrfModel, mut sink: W) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        labels: model.labels.clone(),
        templates: model.templates.clone(),
        gazetteers: model.gazetteers.clone(),
        l2: model.l2,
        features: model.features.names().to_vec(),
        weights: model.weights.clone(),
    };
    serde_json::to_writer(&mut sink, &file).map_err(|e| Error::Model(e.to_string()))?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn load_model<R: Read>(mut source: R) -> Result<CrfModel> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let corrupted = |e: serde_json::Error| Error::Model(format!("corrupted model file: {e}"));
    let header: Header = serde_json::from_str(&text).map_err(corrupted)?;
    if header.format != MODEL_FORMAT {
        return Err(Error::Model(format!(
            "not a CRF model file (format {:?}, expected {MODEL_FORMAT:?})",
            header.format
        )));
    }
    if header.version != MODEL_VERSION {
        return Err(Error::Model(format!(
            "unsupported model version {} (this build reads version {MODEL_VERSION})",
            header.version
        )));
    }
    let file: ModelFile = serde_json::from_str(&text).map_err(corrupted)?;
    let expected = parameter_count(file.features.len(), file.labels.len());
    if file.weights.len() != expected {
        return Err(Error::Model(format!(
            "corrupted model file: {} weights for {} features and {} labels (expected {expected})",
            file.weights.len(),
            file.features.len(),
            file.labels.len()
        )));
    }
    let mut gazetteers = file.gazetteers;
    gazetteers.iter_mut().for_each(Gazetteer::refresh);
    Ok(CrfModel {
        labels: file.labels,
        features: FeatureDictionary::from_names(file.features),
        templates: file.templates,
        gazetteers,
        l2: file.l2,
        weights: file.weights,
    })
}
