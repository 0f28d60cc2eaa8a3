//! The 3-class sentence classifier contract, its two implementations and
//! sentence-level holdout evaluation.

pub mod embedding;
pub mod lexical;

use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Category, TrainingSentence};
use crate::seed::{derive_seed, rng};
use crate::Fingerprint;

pub use embedding::{EmbeddingModel, EmbeddingSettings, Encoder, EncoderSet, HashedEncoder, WordVectors};
pub use lexical::LexicalModel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("class absent: {0}")]
    ClassAbsent(Category),
    #[error("class {0} has {1} sentence(s); at least {2} required")]
    ClassTooSmall(Category, usize, usize),
    #[error("empty sentence at position {0}")]
    EmptySentence(usize),
    #[error("invalid backend config: {0}")]
    Config(String),
    #[error("variant flags {0} are only supported by the embedding_finetune backend")]
    UnsupportedVariant(String),
    #[error("unknown backend {0:?}")]
    UnknownBackend(String),
    #[error("encoder error: {0}")]
    Encoder(String),
    #[error("word vectors {0:?} are not loaded")]
    EncoderNotLoaded(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    EmbeddingFinetune,
    LexicalBaseline,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::EmbeddingFinetune => "embedding_finetune",
            BackendKind::LexicalBaseline => "lexical_baseline",
        }
    }
}

impl FromStr for BackendKind {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embedding_finetune" => Ok(BackendKind::EmbeddingFinetune),
            "lexical_baseline" => Ok(BackendKind::LexicalBaseline),
            other => Err(BackendError::UnknownBackend(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantFlags {
    pub differential_head: bool,
    pub end_to_end: bool,
    pub alternate_embedding_model: bool,
}

impl VariantFlags {
    pub fn any(&self) -> bool {
        self.differential_head || self.end_to_end || self.alternate_embedding_model
    }

    /// All eight on/off combinations, baseline first.
    pub fn all_combinations() -> Vec<VariantFlags> {
        (0..8u8)
            .map(|m| VariantFlags {
                differential_head: m & 1 != 0,
                end_to_end: m & 2 != 0,
                alternate_embedding_model: m & 4 != 0,
            })
            .collect()
    }

    /// Short label such as `baseline` or `differential_head+end_to_end`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.differential_head {
            parts.push("differential_head");
        }
        if self.end_to_end {
            parts.push("end_to_end");
        }
        if self.alternate_embedding_model {
            parts.push("alternate_embedding_model");
        }
        if parts.is_empty() {
            String::from("baseline")
        } else {
            parts.join("+")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub backend_kind: BackendKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub variants: VariantFlags,
    pub embedding: EmbeddingSettings,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            backend_kind: BackendKind::EmbeddingFinetune,
            epochs: 1,
            batch_size: 6,
            train_fraction: 0.75,
            seed: 0,
            variants: VariantFlags::default(),
            embedding: EmbeddingSettings::default(),
        }
    }
}

impl BackendConfig {
    pub fn lexical() -> Self {
        BackendConfig {
            backend_kind: BackendKind::LexicalBaseline,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(BackendError::Config(alloc::format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.epochs == 0 {
            return Err(BackendError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(BackendError::Config("batch_size must be at least 1".into()));
        }
        if self.backend_kind == BackendKind::LexicalBaseline && self.variants.any() {
            return Err(BackendError::UnsupportedVariant(self.variants.label()));
        }
        if self.backend_kind == BackendKind::EmbeddingFinetune && self.embedding.dim == 0 {
            return Err(BackendError::Config("embedding.dim must be at least 1".into()));
        }
        Ok(())
    }
}

/// Anything that assigns one of the three categories to a sentence.
pub trait SentenceClassifier {
    fn classify(&self, sentence: &str) -> Result<Category, BackendError>;
}

/// Labels each sentence, preserving order. Empty strings are rejected.
pub fn predict<C: SentenceClassifier + ?Sized>(model: &C, sentences: &[&str]) -> Result<Vec<Category>, BackendError> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.trim().is_empty() {
                Err(BackendError::EmptySentence(i))
            } else {
                model.classify(s)
            }
        })
        .collect()
}

/// Something that fits a classifier from labeled sentences.
pub trait Backend {
    type Model: SentenceClassifier;

    fn fit(&self, labeled: &[TrainingSentence], seed: u64) -> Result<Self::Model, BackendError>;

    /// Records how many training sentences were withheld from a fit.
    fn note_excluded(&self, _model: &mut Self::Model, _excluded: usize) {}

    /// Configuration to record as run provenance, when there is one.
    fn config(&self) -> Option<&BackendConfig> {
        None
    }
}

/// Order-independent fingerprint of a labeled set.
pub fn training_fingerprint(labeled: &[TrainingSentence]) -> String {
    let mut keys: Vec<u64> = labeled.iter().map(|s| s.key().0).collect();
    keys.sort_unstable();
    let mut fp = Fingerprint::new();
    for k in keys {
        fp.write(&k.to_le_bytes());
    }
    fp.hex()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: BackendConfig,
    pub seed: u64,
    pub training_fingerprint: String,
    pub n_training: usize,
    /// Training sentences withheld for leakage control.
    #[serde(default)]
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Lexical(LexicalModel),
    Embedding(EmbeddingModel),
}

/// A fitted 3-class sentence classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub provenance: Provenance,
    pub body: ModelBody,
}

impl TrainedModel {
    pub fn labels(&self) -> [Category; 3] {
        Category::ALL
    }

    /// The encoder of an embedding model, for re-attaching word vectors.
    pub fn encoder_mut(&mut self) -> Option<&mut Encoder> {
        match &mut self.body {
            ModelBody::Embedding(m) => Some(m.encoder_mut()),
            ModelBody::Lexical(_) => None,
        }
    }
}

impl SentenceClassifier for TrainedModel {
    fn classify(&self, sentence: &str) -> Result<Category, BackendError> {
        match &self.body {
            ModelBody::Lexical(m) => Ok(m.classify(sentence)),
            ModelBody::Embedding(m) => m.classify(sentence),
        }
    }
}

/// Checks that every category is present with at least `min` sentences and
/// that no text is empty.
pub fn check_classes(labeled: &[TrainingSentence], min: usize) -> Result<(), BackendError> {
    let mut counts = [0usize; 3];
    for (i, s) in labeled.iter().enumerate() {
        if s.text.trim().is_empty() {
            return Err(BackendError::EmptySentence(i));
        }
        counts[s.category.index()] += 1;
    }
    for c in Category::ALL {
        match counts[c.index()] {
            0 => return Err(BackendError::ClassAbsent(c)),
            n if n < min => return Err(BackendError::ClassTooSmall(c, n, min)),
            _ => {}
        }
    }
    Ok(())
}

/// A backend chosen by [`BackendConfig`].
#[derive(Debug, Clone)]
pub struct ConfiguredBackend {
    pub config: BackendConfig,
    pub encoders: EncoderSet,
}

impl ConfiguredBackend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let encoders = EncoderSet::hashed(config.embedding.dim);
        Ok(ConfiguredBackend { config, encoders })
    }

    pub fn with_encoders(mut self, encoders: EncoderSet) -> Self {
        self.encoders = encoders;
        self
    }
}

impl Backend for ConfiguredBackend {
    type Model = TrainedModel;

    fn fit(&self, labeled: &[TrainingSentence], seed: u64) -> Result<TrainedModel, BackendError> {
        fit_with(&self.config, &self.encoders, labeled, seed)
    }

    fn note_excluded(&self, model: &mut TrainedModel, excluded: usize) {
        model.provenance.excluded = excluded;
    }

    fn config(&self) -> Option<&BackendConfig> {
        Some(&self.config)
    }
}

/// Fits a classifier with the built-in encoders.
pub fn fit(config: &BackendConfig, labeled: &[TrainingSentence], seed: u64) -> Result<TrainedModel, BackendError> {
    fit_with(config, &EncoderSet::hashed(config.embedding.dim), labeled, seed)
}

pub fn fit_with(
    config: &BackendConfig,
    encoders: &EncoderSet,
    labeled: &[TrainingSentence],
    seed: u64,
) -> Result<TrainedModel, BackendError> {
    config.validate()?;
    check_classes(labeled, 2)?;
    let body = match config.backend_kind {
        BackendKind::LexicalBaseline => ModelBody::Lexical(LexicalModel::fit(labeled)),
        BackendKind::EmbeddingFinetune => ModelBody::Embedding(EmbeddingModel::fit(
            &config.embedding,
            config.variants,
            encoders,
            labeled,
            config.epochs,
            config.batch_size,
            seed,
        )?),
    };
    Ok(TrainedModel {
        provenance: Provenance {
            config: config.clone(),
            seed,
            training_fingerprint: training_fingerprint(labeled),
            n_training: labeled.len(),
            excluded: 0,
        },
        body,
    })
}

/// Macro-averaged sentence-level scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentenceMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
}

/// 3x3 confusion counts, `[truth][prediction]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MulticlassConfusion(pub [[u64; 3]; 3]);

impl MulticlassConfusion {
    pub fn from_pairs(truths: &[Category], preds: &[Category]) -> Self {
        let mut m = [[0u64; 3]; 3];
        for (t, p) in truths.iter().zip(preds) {
            m[t.index()][p.index()] += 1;
        }
        MulticlassConfusion(m)
    }

    /// Accuracy, macro precision/recall/F1 (empty denominators count as 0)
    /// and the multi-class Matthews correlation.
    pub fn metrics(&self) -> SentenceMetrics {
        let m = &self.0;
        let total: u64 = m.iter().flatten().sum();
        let trace: u64 = (0..3).map(|k| m[k][k]).sum();
        let truth_k: [u64; 3] = core::array::from_fn(|k| m[k].iter().sum());
        let pred_k: [u64; 3] = core::array::from_fn(|k| (0..3).map(|t| m[t][k]).sum());
        let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
        for k in 0..3 {
            let pk = ratio(m[k][k] as f64, pred_k[k] as f64);
            let rk = ratio(m[k][k] as f64, truth_k[k] as f64);
            p += pk;
            r += rk;
            f += ratio(2.0 * pk * rk, pk + rk);
        }
        let s = total as f64;
        let c = trace as f64;
        let sum_pt: f64 = (0..3).map(|k| pred_k[k] as f64 * truth_k[k] as f64).sum();
        let sum_pp: f64 = pred_k.iter().map(|&x| (x * x) as f64).sum();
        let sum_tt: f64 = truth_k.iter().map(|&x| (x * x) as f64).sum();
        let mcc = ratio(c * s - sum_pt, libm::sqrt((s * s - sum_pp) * (s * s - sum_tt)));
        SentenceMetrics {
            accuracy: ratio(c, s),
            precision: p / 3.0,
            recall: r / 3.0,
            f1: f / 3.0,
            mcc,
        }
    }
}

pub fn sentence_metrics(truths: &[Category], preds: &[Category]) -> SentenceMetrics {
    MulticlassConfusion::from_pairs(truths, preds).metrics()
}

/// Minimum class size for a stratified holdout split.
pub const MIN_PER_CLASS_FOR_SPLIT: usize = 4;

/// Stratified split: within each category (texts in canonical order) a
/// seeded shuffle assigns `round(fraction * n)` sentences to training,
/// clamped so both sides keep at least one.
pub fn stratified_split(
    labeled: &[TrainingSentence],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<TrainingSentence>, Vec<TrainingSentence>), BackendError> {
    check_classes(labeled, MIN_PER_CLASS_FOR_SPLIT)?;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in Category::ALL {
        let mut members: Vec<&TrainingSentence> = labeled.iter().filter(|s| s.category == c).collect();
        members.sort();
        members.shuffle(&mut rng(derive_seed(seed, c.as_str().as_bytes())));
        let n = members.len();
        let k = (libm::round(train_fraction * n as f64) as usize).clamp(1, n - 1);
        train.extend(members[..k].iter().map(|s| (*s).clone()));
        test.extend(members[k..].iter().map(|s| (*s).clone()));
    }
    Ok((train, test))
}

/// Splits with `split_seed`, fits on the training side with `fit_seed` and
/// scores the held-out side.
pub fn holdout_eval_seeded<B: Backend + ?Sized>(
    backend: &B,
    labeled: &[TrainingSentence],
    train_fraction: f64,
    split_seed: u64,
    fit_seed: u64,
) -> Result<SentenceMetrics, BackendError> {
    let (train, test) = stratified_split(labeled, train_fraction, split_seed)?;
    let model = backend.fit(&train, fit_seed)?;
    let texts: Vec<&str> = test.iter().map(|s| s.text.as_str()).collect();
    let preds = predict(&model, &texts)?;
    let truths: Vec<Category> = test.iter().map(|s| s.category).collect();
    Ok(sentence_metrics(&truths, &preds))
}

/// Stratified holdout evaluation; split and fit seeds both derive from
/// `seed`.
pub fn holdout_eval<B: Backend + ?Sized>(
    backend: &B,
    labeled: &[TrainingSentence],
    train_fraction: f64,
    seed: u64,
) -> Result<SentenceMetrics, BackendError> {
    holdout_eval_seeded(
        backend,
        labeled,
        train_fraction,
        derive_seed(seed, b"split"),
        derive_seed(seed, b"fit"),
    )
}
