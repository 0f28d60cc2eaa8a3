//! Leakage-safe populist rhetoric detection.
//!
//! Sentence-level 3-class classification (populist, pluralist, neutral) is
//! aggregated into speech- and speaker-level populist fractions, which a
//! single-cutoff decision stump turns into binary labels that are scored
//! against human holistic grades.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, the command
//! line, plots and worker pools live in the `popsent` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod backend;
pub mod corpus;
pub mod experiments;
pub mod leakage;
pub mod metrics;
pub mod pipeline;
pub mod synth;
pub mod thresholding;

mod fingerprint;
mod linalg;
mod seed;

pub use fingerprint::{fnv1a64, Fingerprint};
pub use seed::derive_seed;

pub use backend::{BackendConfig, BackendKind, SentenceMetrics, TrainedModel};
pub use corpus::{BinaryLabel, Category, Corpus, Grade, Speech, SpeechType, TrainingSentence};
pub use leakage::MatchIndex;
pub use metrics::{ClassificationMetrics, ConfusionMatrix};
pub use pipeline::{PipelineResult, SpeakerPrediction, SpeechPrediction, Unit, UnitKind};
pub use thresholding::{Stump, ThresholdMode};
