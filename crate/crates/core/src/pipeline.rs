//! Leakage-safe per-unit training, per-speech scoring and speaker pooling.
//!
//! Each unit (a governor term or a candidate) gets its own model, trained
//! on every training sentence except those matched to the unit's speeches.
//! A speech's populist fraction is the share of its sentences predicted
//! populist; a speaker's fraction pools sentence counts over all of the
//! speaker's speeches.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::{predict, training_fingerprint, Backend, BackendConfig, BackendError};
use crate::corpus::{classifiable_sentences, BinaryLabel, Category, Corpus, Grade, SentenceKey, Speech, SpeechType, TrainingSentence};
use crate::leakage::MatchIndex;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("unknown unit kind {0:?} (expected term or speaker)")]
    UnknownUnitKind(String),
    #[error("unit {unit}: excluding matched sentences leaves no {class} training sentences")]
    ClassEmptied { unit: String, class: Category },
    #[error("unit {unit}: {source}")]
    Backend { unit: String, source: BackendError },
    #[error("speech {0} has no sentences")]
    NoSentences(String),
    #[error("no predictions to aggregate")]
    NothingToAggregate,
    #[error("predictions mix speakers {0:?} and {1:?}")]
    MixedSpeakers(String, String),
    #[error("speech {0} is not in the corpus")]
    UnknownSpeech(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    /// One unit per `unit_id` (governor term).
    #[default]
    Term,
    /// One unit per `speaker_id` (candidate).
    Speaker,
}

impl UnitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitKind::Term => "term",
            UnitKind::Speaker => "speaker",
        }
    }

    fn key(self, s: &Speech) -> &str {
        match self {
            UnitKind::Term => &s.unit_id,
            UnitKind::Speaker => &s.speaker_id,
        }
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnitKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "term" => Ok(UnitKind::Term),
            "speaker" => Ok(UnitKind::Speaker),
            other => Err(PipelineError::UnknownUnitKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub unit_id: String,
    pub kind: UnitKind,
    pub speech_ids: Vec<String>,
    /// Training sentences matched to this unit's speeches.
    pub excluded: BTreeSet<SentenceKey>,
}

/// One unit per distinct term or speaker, in id order, each carrying the
/// training sentences it must not see.
pub fn plan_units(corpus: &Corpus, kind: UnitKind, index: &MatchIndex) -> Vec<Unit> {
    let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for s in corpus.speeches() {
        groups.entry(kind.key(s)).or_default().push(s.id.clone());
    }
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for s in corpus.speeches() {
        owner.insert(s.id.as_str(), kind.key(s));
    }
    let mut excluded: BTreeMap<&str, BTreeSet<SentenceKey>> = BTreeMap::new();
    for e in index.entries() {
        if let Some(unit) = e.speech_id.as_deref().and_then(|id| owner.get(id)) {
            excluded.entry(unit).or_default().insert(e.key);
        }
    }
    groups
        .into_iter()
        .map(|(unit, mut speech_ids)| {
            speech_ids.sort();
            Unit {
                unit_id: unit.to_string(),
                kind,
                speech_ids,
                excluded: excluded.remove(unit).unwrap_or_default(),
            }
        })
        .collect()
}

/// What a unit's model was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitTraining {
    pub unit_id: String,
    pub n_training: usize,
    pub excluded: usize,
    pub training_fingerprint: String,
    pub seed: u64,
    /// Keys of the sentences actually used, for post-hoc audit.
    #[serde(skip)]
    pub used_keys: BTreeSet<SentenceKey>,
}

/// The unit's training subset: everything not in its exclusion set.
pub fn training_for_unit(unit: &Unit, training: &[TrainingSentence]) -> Result<Vec<TrainingSentence>, PipelineError> {
    let kept: Vec<TrainingSentence> = training
        .iter()
        .filter(|s| !unit.excluded.contains(&s.key()))
        .cloned()
        .collect();
    for class in Category::ALL {
        if training.iter().any(|s| s.category == class) && !kept.iter().any(|s| s.category == class) {
            return Err(PipelineError::ClassEmptied {
                unit: unit.unit_id.clone(),
                class,
            });
        }
    }
    Ok(kept)
}

/// Seed of a unit's fit, derived from the run seed and the unit id.
pub fn unit_seed(run_seed: u64, unit: &Unit) -> u64 {
    derive_seed(run_seed, unit.unit_id.as_bytes())
}

/// Fits the backend on the training set minus the unit's exclusions.
pub fn train_excluding<B: Backend + ?Sized>(
    backend: &B,
    unit: &Unit,
    training: &[TrainingSentence],
    seed: u64,
) -> Result<(B::Model, UnitTraining), PipelineError> {
    let kept = training_for_unit(unit, training)?;
    let mut model = backend.fit(&kept, seed).map_err(|source| PipelineError::Backend {
        unit: unit.unit_id.clone(),
        source,
    })?;
    let excluded = training.len() - kept.len();
    backend.note_excluded(&mut model, excluded);
    Ok((
        model,
        UnitTraining {
            unit_id: unit.unit_id.clone(),
            n_training: kept.len(),
            excluded,
            training_fingerprint: training_fingerprint(&kept),
            seed,
            used_keys: kept.iter().map(TrainingSentence::key).collect(),
        },
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub populist: usize,
    pub pluralist: usize,
    pub neutral: usize,
}

impl CategoryCounts {
    pub fn add(&mut self, c: Category) {
        match c {
            Category::Populist => self.populist += 1,
            Category::Pluralist => self.pluralist += 1,
            Category::Neutral => self.neutral += 1,
        }
    }

    pub fn merge(&mut self, other: &CategoryCounts) {
        self.populist += other.populist;
        self.pluralist += other.pluralist;
        self.neutral += other.neutral;
    }

    pub fn total(&self) -> usize {
        self.populist + self.pluralist + self.neutral
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechPrediction {
    pub speech_id: String,
    pub speaker_id: String,
    pub unit_id: String,
    pub speech_type: SpeechType,
    pub n_sentences: usize,
    pub counts: CategoryCounts,
    pub populist_fraction: f64,
    pub pluralist_fraction: f64,
    pub human_score: Grade,
}

impl SpeechPrediction {
    pub fn truth(&self) -> BinaryLabel {
        self.human_score.binarize()
    }
}

/// Splits a speech, labels every sentence and tallies the categories.
pub fn score_speech<M: crate::backend::SentenceClassifier + ?Sized>(
    model: &M,
    speech: &Speech,
) -> Result<SpeechPrediction, PipelineError> {
    let sentences = classifiable_sentences(&speech.text);
    if sentences.is_empty() {
        return Err(PipelineError::NoSentences(speech.id.clone()));
    }
    let labels = predict(model, &sentences).map_err(|source| PipelineError::Backend {
        unit: speech.unit_id.clone(),
        source,
    })?;
    let mut counts = CategoryCounts::default();
    labels.iter().for_each(|&c| counts.add(c));
    let n = sentences.len();
    Ok(SpeechPrediction {
        speech_id: speech.id.clone(),
        speaker_id: speech.speaker_id.clone(),
        unit_id: speech.unit_id.clone(),
        speech_type: speech.speech_type,
        n_sentences: n,
        counts,
        populist_fraction: counts.populist as f64 / n as f64,
        pluralist_fraction: counts.pluralist as f64 / n as f64,
        human_score: speech.human_score,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerPrediction {
    pub speaker_id: String,
    pub n_speeches: usize,
    pub n_sentences: usize,
    pub counts: CategoryCounts,
    pub populist_fraction: f64,
    pub pluralist_fraction: f64,
    pub mean_human_score: f64,
}

impl SpeakerPrediction {
    pub fn truth(&self) -> BinaryLabel {
        BinaryLabel::from_bool(self.mean_human_score >= 0.5)
    }
}

/// Pools sentence counts over one speaker's speeches. The speaker's grade
/// is the unweighted mean of the speech grades.
pub fn aggregate_speaker(predictions: &[SpeechPrediction]) -> Result<SpeakerPrediction, PipelineError> {
    let first = predictions.first().ok_or(PipelineError::NothingToAggregate)?;
    let mut counts = CategoryCounts::default();
    let mut n_sentences = 0;
    let mut tenths = 0u64;
    for p in predictions {
        if p.speaker_id != first.speaker_id {
            return Err(PipelineError::MixedSpeakers(first.speaker_id.clone(), p.speaker_id.clone()));
        }
        counts.merge(&p.counts);
        n_sentences += p.n_sentences;
        tenths += u64::from(p.human_score.tenths());
    }
    Ok(SpeakerPrediction {
        speaker_id: first.speaker_id.clone(),
        n_speeches: predictions.len(),
        n_sentences,
        counts,
        populist_fraction: counts.populist as f64 / n_sentences as f64,
        pluralist_fraction: counts.pluralist as f64 / n_sentences as f64,
        mean_human_score: tenths as f64 / (10 * predictions.len()) as f64,
    })
}

/// Speaker predictions for every speaker present, in speaker id order.
pub fn aggregate_speakers(predictions: &[SpeechPrediction]) -> Vec<SpeakerPrediction> {
    let mut by_speaker: BTreeMap<&str, Vec<SpeechPrediction>> = BTreeMap::new();
    for p in predictions {
        by_speaker.entry(&p.speaker_id).or_default().push(p.clone());
    }
    by_speaker
        .values()
        .map(|ps| aggregate_speaker(ps).expect("non-empty single-speaker group"))
        .collect()
}

/// Everything one unit contributes to a run.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitOutcome {
    pub unit: Unit,
    pub training: UnitTraining,
    pub predictions: Vec<SpeechPrediction>,
}

/// Scores every speech of a unit with the given model.
pub fn score_unit<M: crate::backend::SentenceClassifier + ?Sized>(
    model: &M,
    unit: &Unit,
    corpus: &Corpus,
) -> Result<Vec<SpeechPrediction>, PipelineError> {
    unit.speech_ids
        .iter()
        .map(|id| {
            let s = corpus.speech(id).ok_or_else(|| PipelineError::UnknownSpeech(id.clone()))?;
            score_speech(model, s)
        })
        .collect()
}

/// Trains one unit's model and scores its speeches.
pub fn run_unit<B: Backend + ?Sized>(
    backend: &B,
    unit: &Unit,
    corpus: &Corpus,
    training: &[TrainingSentence],
    run_seed: u64,
) -> Result<UnitOutcome, PipelineError> {
    let (model, info) = train_excluding(backend, unit, training, unit_seed(run_seed, unit))?;
    let predictions = score_unit(&model, unit, corpus)?;
    Ok(UnitOutcome {
        unit: unit.clone(),
        training: info,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<BackendConfig>,
    pub seed: u64,
    pub unit_kind: UnitKind,
    pub match_index_hash: String,
    pub match_threshold: f64,
    pub corpus: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub speeches: Vec<SpeechPrediction>,
    pub speakers: Vec<SpeakerPrediction>,
    pub units: Vec<UnitTraining>,
    pub provenance: RunProvenance,
}

impl PipelineResult {
    /// Share of all scored sentences predicted populist, in percent.
    pub fn populist_sentence_percentage(&self) -> f64 {
        let (pop, total) = self
            .speeches
            .iter()
            .fold((0, 0), |(p, t), s| (p + s.counts.populist, t + s.n_sentences));
        100.0 * pop as f64 / total as f64
    }
}

/// Combines unit outcomes into a result; output is sorted by id so the
/// order outcomes arrive in does not matter.
pub fn assemble(mut outcomes: Vec<UnitOutcome>, provenance: RunProvenance) -> PipelineResult {
    outcomes.sort_by(|a, b| a.unit.unit_id.cmp(&b.unit.unit_id));
    let mut speeches: Vec<SpeechPrediction> = outcomes.iter().flat_map(|o| o.predictions.iter().cloned()).collect();
    speeches.sort_by(|a, b| a.speech_id.cmp(&b.speech_id));
    let speakers = aggregate_speakers(&speeches);
    PipelineResult {
        speeches,
        speakers,
        units: outcomes.into_iter().map(|o| o.training).collect(),
        provenance,
    }
}

pub fn provenance_for<B: Backend + ?Sized>(
    backend: &B,
    corpus: &Corpus,
    index: &MatchIndex,
    kind: UnitKind,
    seed: u64,
) -> RunProvenance {
    RunProvenance {
        config: backend.config().cloned(),
        seed,
        unit_kind: kind,
        match_index_hash: index.fingerprint().hex(),
        match_threshold: index.threshold(),
        corpus: corpus.name().to_string(),
    }
}

/// Plans units, trains each with its exclusions, scores every speech and
/// pools speakers. The first failing unit aborts the run.
pub fn run_pipeline<B: Backend + ?Sized>(
    backend: &B,
    corpus: &Corpus,
    training: &[TrainingSentence],
    index: &MatchIndex,
    kind: UnitKind,
    seed: u64,
) -> Result<PipelineResult, PipelineError> {
    let units = plan_units(corpus, kind, index);
    let outcomes = units
        .iter()
        .map(|u| run_unit(backend, u, corpus, training, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(outcomes, provenance_for(backend, corpus, index, kind, seed)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageViolation {
    pub unit_id: String,
    pub sentence: SentenceKey,
    pub speech_id: String,
}

/// Post-hoc check that no unit trained on a sentence matched to one of its
/// own speeches.
pub fn audit_leakage(units: &[Unit], trainings: &[UnitTraining], index: &MatchIndex) -> Vec<LeakageViolation> {
    let by_id: BTreeMap<&str, &Unit> = units.iter().map(|u| (u.unit_id.as_str(), u)).collect();
    let mut out = Vec::new();
    for t in trainings {
        let Some(unit) = by_id.get(t.unit_id.as_str()) else { continue };
        for &k in &t.used_keys {
            if let Some(src) = index.source_of(k) {
                if unit.speech_ids.binary_search_by(|s| s.as_str().cmp(src)).is_ok() {
                    out.push(LeakageViolation {
                        unit_id: t.unit_id.clone(),
                        sentence: k,
                        speech_id: src.to_string(),
                    });
                }
            }
        }
    }
    out
}
