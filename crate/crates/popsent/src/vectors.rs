//! Optional pretrained word vectors for the embedding backend.
//!
//! When `POPSENT_MODEL_CACHE` names a directory holding `base.vec` (and
//! optionally `alternate.vec`) in the fastText text format, those vectors
//! replace the built-in hashed encoders.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use popsent_core::backend::{Encoder, EncoderSet, WordVectors};
use popsent_core::TrainedModel;

pub const MODEL_CACHE_ENV: &str = "POPSENT_MODEL_CACHE";

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(MODEL_CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Reads `word v1 v2 ...` lines; a leading `count dim` header is skipped.
pub fn load_vec(path: &Path, name: &str) -> Result<WordVectors> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut table = BTreeMap::new();
    let mut dim = None;
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values: Vec<f32> = parts
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("{} line {}", path.display(), i + 1))?;
        if i == 0 && values.len() == 1 && word.parse::<usize>().is_ok() {
            continue;
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => bail!("{} line {}: expected {d} values", path.display(), i + 1),
            _ => {}
        }
        table.insert(word.to_lowercase(), values);
    }
    let Some(dim) = dim else { bail!("{} holds no vectors", path.display()) };
    Ok(WordVectors::new(name, dim, table)?)
}

/// Loaded vectors by name (`base`, `alternate`).
#[derive(Debug, Clone, Default)]
pub struct VectorCache {
    pub vectors: BTreeMap<String, Arc<WordVectors>>,
}

impl VectorCache {
    pub fn load(dir: &Path) -> Result<Self> {
        let mut vectors = BTreeMap::new();
        for name in ["base", "alternate"] {
            let p = dir.join(format!("{name}.vec"));
            if p.exists() {
                vectors.insert(name.to_string(), Arc::new(load_vec(&p, name)?));
            }
        }
        Ok(VectorCache { vectors })
    }

    pub fn from_env() -> Result<Self> {
        match cache_dir() {
            Some(d) => Self::load(&d),
            None => Ok(Self::default()),
        }
    }

    /// Hashed encoders, each replaced by cached vectors when present.
    pub fn encoders(&self, hashed_dim: usize) -> EncoderSet {
        let mut set = EncoderSet::hashed(hashed_dim);
        if let Some(v) = self.vectors.get("base") {
            set.base = Encoder::from_vectors(v.clone());
        }
        if let Some(v) = self.vectors.get("alternate") {
            set.alternate = Encoder::from_vectors(v.clone());
        }
        set
    }

    /// Re-attaches the vectors a loaded model was trained with.
    pub fn attach(&self, model: &mut TrainedModel) -> Result<()> {
        if let Some(enc) = model.encoder_mut() {
            if let Some(name) = enc.missing_vectors().map(str::to_string) {
                let Some(v) = self.vectors.get(&name) else {
                    bail!("model needs word vectors {name:?}; set {MODEL_CACHE_ENV} to the directory holding {name}.vec");
                };
                enc.attach(v.clone())?;
            }
        }
        Ok(())
    }
}
