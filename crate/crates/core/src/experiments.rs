//! Boundary studies: cross-context transfer, data-sparsity curves and the
//! hyperparameter grid.
//!
//! Every job (a sparsity row, a grid variant) is an independent function of
//! its inputs and seed, so callers may run jobs concurrently and collect the
//! rows in request order.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::backend::{holdout_eval_seeded, Backend, BackendConfig, BackendError, ConfiguredBackend, EncoderSet, SentenceMetrics};
use crate::corpus::{BinaryLabel, Category, Corpus, SpeechType, TrainingSentence};
use crate::leakage::{build_match_index, LeakageError};
use crate::linalg::mean_std;
use crate::metrics::{evaluate_binary, ClassificationMetrics, MetricsError, MetricsRow};
use crate::pipeline::{aggregate_speakers, score_speech, PipelineError, SpeechPrediction};
use crate::seed::{derive_seed, rng};
use crate::thresholding::{cross_validated_labels, fit_with_mode, Stump, StumpError, ThresholdMode, DEFAULT_CV_FOLDS, DEFAULT_RUNS};

/// Sentences per class, largest first.
pub const DEFAULT_SPARSITY_COUNTS: [usize; 12] = [1000, 400, 250, 150, 100, 90, 80, 70, 60, 50, 40, 30];

pub const DEFAULT_REPETITIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Stump(#[from] StumpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Leakage(#[from] LeakageError),
    #[error("requested {count} {class} sentences but only {available} are available")]
    CountUnavailable { count: usize, class: Category, available: usize },
    #[error("sentence counts must be positive and distinct, got {0}")]
    BadCount(usize),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("no {0} speeches in the test corpus")]
    EmptyFilter(SpeechType),
    #[error("test corpus is empty")]
    EmptyTestCorpus,
}

/// How binary labels are learned from fractions at one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StumpSettings {
    pub mode: ThresholdMode,
    pub runs: usize,
    pub folds: usize,
}

impl Default for StumpSettings {
    fn default() -> Self {
        StumpSettings {
            mode: ThresholdMode::Bootstrap,
            runs: DEFAULT_RUNS,
            folds: DEFAULT_CV_FOLDS,
        }
    }
}

/// Stump, binary predictions and metrics for one level (speech or speaker).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEvaluation {
    pub stump: Stump,
    pub predictions: Vec<BinaryLabel>,
    pub metrics: ClassificationMetrics,
    pub auroc: Option<f64>,
}

impl LevelEvaluation {
    pub fn row(&self) -> MetricsRow {
        MetricsRow::new(&self.metrics, self.auroc)
    }
}

/// Fits a stump on `fractions` against `truths` and scores the resulting
/// labels. In `Cv` mode each label comes from a stump that never saw it;
/// the reported stump is still the one fit on everything.
pub fn evaluate_level(
    fractions: &[f64],
    truths: &[BinaryLabel],
    settings: &StumpSettings,
    seed: u64,
) -> Result<LevelEvaluation, ExperimentError> {
    let stump = fit_with_mode(settings.mode, fractions, truths, settings.runs, seed)?;
    let predictions = match settings.mode {
        ThresholdMode::Cv => cross_validated_labels(fractions, truths, settings.folds, settings.runs, seed)?,
        _ => stump.classify_all(fractions)?,
    };
    let (metrics, auroc) = evaluate_binary(fractions, &predictions, truths)?;
    Ok(LevelEvaluation {
        stump,
        predictions,
        metrics,
        auroc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityRow {
    pub sentences_per_class: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: SentenceMetrics,
}

/// Exactly `count` sentences of each class, drawn uniformly without
/// replacement. Within a class the draw depends only on the seed, the count
/// and the set of sentences, not their order.
pub fn sample_per_class(
    training: &[TrainingSentence],
    count: usize,
    seed: u64,
) -> Result<Vec<TrainingSentence>, ExperimentError> {
    if count == 0 {
        return Err(ExperimentError::BadCount(0));
    }
    let base = derive_seed(seed, &(count as u64).to_le_bytes());
    let mut out = Vec::with_capacity(3 * count);
    for class in Category::ALL {
        let mut members: Vec<&TrainingSentence> = training.iter().filter(|s| s.category == class).collect();
        if members.len() < count {
            return Err(ExperimentError::CountUnavailable {
                count,
                class,
                available: members.len(),
            });
        }
        members.sort();
        members.partial_shuffle(&mut rng(derive_seed(base, class.as_str().as_bytes())), count);
        out.extend(members[..count].iter().map(|s| (*s).clone()));
    }
    Ok(out)
}

/// Checks a count list before any work: positive, distinct and available.
pub fn check_counts(training: &[TrainingSentence], counts: &[usize]) -> Result<(), ExperimentError> {
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 || counts[..i].contains(&c) {
            return Err(ExperimentError::BadCount(c));
        }
        for class in Category::ALL {
            let available = training.iter().filter(|s| s.category == class).count();
            if c > available {
                return Err(ExperimentError::CountUnavailable { count: c, class, available });
            }
        }
    }
    Ok(())
}

/// One sparsity row: sample, split, fit, score.
pub fn sparsity_row<B: Backend + ?Sized>(
    backend: &B,
    training: &[TrainingSentence],
    count: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<SparsityRow, ExperimentError> {
    let sample = sample_per_class(training, count, seed)?;
    let row_seed = derive_seed(seed, &(count as u64).to_le_bytes());
    let split_seed = derive_seed(row_seed, b"split");
    let (train, test) = crate::backend::stratified_split(&sample, train_fraction, split_seed)?;
    let metrics = holdout_eval_seeded(backend, &sample, train_fraction, split_seed, derive_seed(row_seed, b"fit"))?;
    Ok(SparsityRow {
        sentences_per_class: count,
        n_train: train.len(),
        n_test: test.len(),
        metrics,
    })
}

/// One row per count, in the order given.
pub fn sparsity_experiment<B: Backend + ?Sized>(
    backend: &B,
    training: &[TrainingSentence],
    counts: &[usize],
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<SparsityRow>, ExperimentError> {
    check_counts(training, counts)?;
    counts
        .iter()
        .map(|&c| sparsity_row(backend, training, c, train_fraction, seed))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossContextReport {
    pub train_corpus: String,
    pub test_corpus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speech_type: Option<SpeechType>,
    pub n_speeches: usize,
    pub n_sentences: usize,
    /// Training sentences dropped because they matched a test speech.
    pub excluded_matches: usize,
    pub populist_percentage: f64,
    pub speech: LevelEvaluation,
    pub speech_metrics: MetricsRow,
    pub speaker_metrics: Option<MetricsRow>,
    pub predictions: Vec<SpeechPrediction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossContextInput<'a> {
    pub train_name: &'a str,
    pub training: &'a [TrainingSentence],
    pub test: &'a Corpus,
    pub speech_type: Option<SpeechType>,
    pub match_threshold: f64,
    pub stump: StumpSettings,
    pub seed: u64,
}

/// Trains once on the whole training set and scores every (optionally
/// filtered) test speech; binary labels come from a stump fit on the test
/// speeches themselves. Training sentences that match a test speech are
/// dropped and counted, so a shared corpus cannot leak.
pub fn cross_context<B: Backend + ?Sized>(
    backend: &B,
    input: &CrossContextInput<'_>,
) -> Result<CrossContextReport, ExperimentError> {
    let test = match input.speech_type {
        Some(t) => {
            let c = input.test.filter_speech_type(t);
            if c.is_empty() {
                return Err(ExperimentError::EmptyFilter(t));
            }
            c
        }
        None => input.test.clone(),
    };
    if test.is_empty() {
        return Err(ExperimentError::EmptyTestCorpus);
    }
    let index = build_match_index(input.training, &test, input.match_threshold)?;
    let kept: Vec<TrainingSentence> = input
        .training
        .iter()
        .filter(|s| index.source_of(s.key()).is_none())
        .cloned()
        .collect();
    let excluded_matches = input.training.len() - kept.len();
    let mut model = backend.fit(&kept, derive_seed(input.seed, b"cross-context"))?;
    backend.note_excluded(&mut model, excluded_matches);
    let predictions = test
        .speeches()
        .iter()
        .map(|s| score_speech(&model, s))
        .collect::<Result<Vec<_>, _>>()?;

    let (pop, total) = predictions
        .iter()
        .fold((0, 0), |(p, t), s| (p + s.counts.populist, t + s.n_sentences));
    let fractions: Vec<f64> = predictions.iter().map(|p| p.populist_fraction).collect();
    let truths: Vec<BinaryLabel> = predictions.iter().map(SpeechPrediction::truth).collect();
    let speech = evaluate_level(&fractions, &truths, &input.stump, derive_seed(input.seed, b"speech-stump"))?;

    let speakers = aggregate_speakers(&predictions);
    let speaker_metrics = if speakers.len() >= 2 {
        let f: Vec<f64> = speakers.iter().map(|s| s.populist_fraction).collect();
        let t: Vec<BinaryLabel> = speakers.iter().map(|s| s.truth()).collect();
        Some(evaluate_level(&f, &t, &input.stump, derive_seed(input.seed, b"speaker-stump"))?.row())
    } else {
        None
    };

    Ok(CrossContextReport {
        train_corpus: input.train_name.to_string(),
        test_corpus: test.name().to_string(),
        speech_type: input.speech_type,
        n_speeches: predictions.len(),
        n_sentences: total,
        excluded_matches,
        populist_percentage: 100.0 * pop as f64 / total as f64,
        speech_metrics: speech.row(),
        speech,
        speaker_metrics,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub variant: String,
    pub config: BackendConfig,
    pub mean: SentenceMetrics,
    pub std: SentenceMetrics,
    pub runs: Vec<SentenceMetrics>,
}

fn summarize(runs: &[SentenceMetrics]) -> (SentenceMetrics, SentenceMetrics) {
    let stat = |f: fn(&SentenceMetrics) -> f64| mean_std(&runs.iter().map(f).collect::<Vec<_>>());
    let acc = stat(|m| m.accuracy);
    let p = stat(|m| m.precision);
    let r = stat(|m| m.recall);
    let f1 = stat(|m| m.f1);
    let mcc = stat(|m| m.mcc);
    (
        SentenceMetrics {
            accuracy: acc.0,
            precision: p.0,
            recall: r.0,
            f1: f1.0,
            mcc: mcc.0,
        },
        SentenceMetrics {
            accuracy: acc.1,
            precision: p.1,
            recall: r.1,
            f1: f1.1,
            mcc: mcc.1,
        },
    )
}

/// Repeated holdout evaluation of one configuration. The split is fixed by
/// `seed`; repetitions differ only in the fit seed, so spread measures
/// training randomness.
pub fn grid_row(
    config: &BackendConfig,
    encoders: &EncoderSet,
    labeled: &[TrainingSentence],
    repetitions: usize,
    seed: u64,
) -> Result<GridRow, ExperimentError> {
    if repetitions == 0 {
        return Err(ExperimentError::NoRepetitions);
    }
    let backend = ConfiguredBackend::new(config.clone())?.with_encoders(encoders.clone());
    let split_seed = derive_seed(seed, b"split");
    let runs = (0..repetitions as u64)
        .map(|rep| {
            holdout_eval_seeded(&backend, labeled, config.train_fraction, split_seed, derive_seed(seed, &rep.to_le_bytes()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (mean, std) = summarize(&runs);
    Ok(GridRow {
        variant: config.variants.label(),
        config: config.clone(),
        mean,
        std,
        runs,
    })
}

/// One row per configuration, in the order given. Any failing cell fails
/// the whole grid.
pub fn hyperparameter_grid(
    variants: &[BackendConfig],
    encoders: &EncoderSet,
    labeled: &[TrainingSentence],
    repetitions: usize,
    seed: u64,
) -> Result<Vec<GridRow>, ExperimentError> {
    if variants.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    if repetitions == 0 {
        return Err(ExperimentError::NoRepetitions);
    }
    variants
        .iter()
        .map(|c| grid_row(c, encoders, labeled, repetitions, seed))
        .collect()
}

/// The base configuration under every combination of the variant flags.
pub fn variant_grid(base: &BackendConfig) -> Vec<BackendConfig> {
    crate::backend::VariantFlags::all_combinations()
        .into_iter()
        .map(|variants| BackendConfig {
            variants,
            ..base.clone()
        })
        .collect()
}
