//! TOML configuration merged with command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use popsent_core::backend::{BackendConfig, BackendKind};
use popsent_core::experiments::{StumpSettings, DEFAULT_REPETITIONS, DEFAULT_SPARSITY_COUNTS};
use popsent_core::leakage::DEFAULT_MATCH_THRESHOLD;
use popsent_core::synth::SynthSpec;
use popsent_core::{ThresholdMode, UnitKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    pub counts: Vec<usize>,
    pub repetitions: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            counts: DEFAULT_SPARSITY_COUNTS.to_vec(),
            repetitions: DEFAULT_REPETITIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub workers: usize,
    pub unit_kind: UnitKind,
    pub match_threshold: f64,
    pub backend: BackendConfig,
    pub threshold: StumpSettings,
    pub synth: SynthSpec,
    pub experiments: ExperimentSettings,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            workers: 1,
            unit_kind: UnitKind::Term,
            match_threshold: DEFAULT_MATCH_THRESHOLD,
            backend: BackendConfig::default(),
            threshold: StumpSettings::default(),
            synth: SynthSpec::default(),
            experiments: ExperimentSettings::default(),
        }
    }
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub backend: Option<BackendKind>,
    pub threshold_mode: Option<ThresholdMode>,
    pub match_threshold: Option<f64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        crate::io::require(path, "config")?;
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// File (or defaults), then flags, then a consistency check. Nothing
    /// runs when the merged settings conflict.
    pub fn resolve(path: Option<&Path>, o: &Overrides) -> Result<Self> {
        let mut c = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(s) = o.seed {
            c.seed = s;
        }
        if let Some(w) = o.workers {
            c.workers = w;
        }
        if let Some(b) = o.backend {
            c.backend.backend_kind = b;
        }
        if let Some(m) = o.threshold_mode {
            c.threshold.mode = m;
        }
        if let Some(t) = o.match_threshold {
            c.match_threshold = t;
        }
        c.backend.seed = c.seed;
        c.synth.seed = c.seed;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.backend.validate().context("backend settings conflict")?;
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.match_threshold) {
            bail!("match threshold {} outside [0, 1]", self.match_threshold);
        }
        if self.threshold.runs == 0 {
            bail!("threshold runs must be at least 1");
        }
        if self.threshold.mode == ThresholdMode::Cv && self.threshold.folds < 2 {
            bail!("cv threshold mode needs at least 2 folds");
        }
        if !(0.0..1.0).contains(&self.backend.train_fraction) || self.backend.train_fraction == 0.0 {
            bail!("train_fraction {} outside (0, 1)", self.backend.train_fraction);
        }
        Ok(())
    }
}
