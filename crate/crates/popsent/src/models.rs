//! Per-unit model artifacts: `models/manifest.json` plus one directory per
//! unit holding `model.json`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use popsent_core::backend::BackendConfig;
use popsent_core::pipeline::{RunProvenance, Unit, UnitTraining};
use popsent_core::TrainedModel;
use serde::{Deserialize, Serialize};

use crate::io::{read_json, write_json};
use crate::vectors::VectorCache;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub unit: Unit,
    pub training: UnitTraining,
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: BackendConfig,
    pub provenance: RunProvenance,
    pub units: Vec<ManifestEntry>,
}

pub fn models_dir(out: &Path) -> PathBuf {
    out.join("models")
}

pub fn unit_dir_name(i: usize) -> String {
    format!("unit-{i:04}")
}

pub fn save_model(out: &Path, dir: &str, model: &TrainedModel) -> Result<()> {
    write_json(&models_dir(out).join(dir).join("model.json"), model)
}

pub fn save_manifest(out: &Path, manifest: &Manifest) -> Result<()> {
    write_json(&models_dir(out).join("manifest.json"), manifest)
}

pub fn load_manifest(out: &Path) -> Result<Manifest> {
    read_json(&models_dir(out).join("manifest.json"), "model manifest")
}

/// Loads a unit model and checks it against its manifest entry.
pub fn load_model(out: &Path, entry: &ManifestEntry, cache: &VectorCache) -> Result<TrainedModel> {
    let mut model: TrainedModel = read_json(&models_dir(out).join(&entry.dir).join("model.json"), "model")?;
    if model.provenance.training_fingerprint != entry.training.training_fingerprint {
        bail!(
            "model for unit {} does not match the manifest training fingerprint",
            entry.unit.unit_id
        );
    }
    cache.attach(&mut model)?;
    Ok(model)
}
