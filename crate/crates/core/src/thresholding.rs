//! Single-cutoff decision stump over populist fractions.
//!
//! A stump splits at the midpoint between two consecutive distinct
//! fractions, choosing the split with the lowest weighted Gini impurity.
//! In bootstrap mode the split is fit on `runs` seeded resamples and the
//! modal threshold is kept.

use alloc::vec::Vec;
use core::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::BinaryLabel;
use crate::seed::{derive_seed, rng};

pub const DEFAULT_RUNS: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StumpError {
    #[error("length mismatch: {0} fractions vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooFew(usize),
    #[error("fraction {0} outside [0, 1]")]
    FractionOutOfRange(f64),
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("unknown threshold mode {0:?}")]
    UnknownMode(alloc::string::String),
}

/// How the cutoff is learned and how its error is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Modal threshold over seeded bootstrap fits, evaluated in-sample.
    #[default]
    Bootstrap,
    /// One fit on the full data, evaluated in-sample.
    Deterministic,
    /// Bootstrap fits inside k-fold cross-validation; each item is labeled
    /// by a stump that never saw it.
    Cv,
}

impl FromStr for ThresholdMode {
    type Err = StumpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bootstrap" => Ok(ThresholdMode::Bootstrap),
            "deterministic" => Ok(ThresholdMode::Deterministic),
            "cv" => Ok(ThresholdMode::Cv),
            other => Err(StumpError::UnknownMode(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degenerate {
    /// Training labels were all populist: every fraction is populist.
    AllPopulist,
    /// Training labels were all non-populist: no fraction is populist.
    AllNonPopulist,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub threshold: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<Degenerate>,
    pub runs: usize,
    pub seed: u64,
    pub modal_count: usize,
    pub histogram: Vec<HistogramBin>,
}

impl Stump {
    fn degenerate(kind: Degenerate, runs: usize, seed: u64) -> Self {
        Stump {
            threshold: match kind {
                Degenerate::AllPopulist => 0.0,
                Degenerate::AllNonPopulist => 1.0,
            },
            degenerate: Some(kind),
            runs,
            seed,
            modal_count: 0,
            histogram: Vec::new(),
        }
    }

    /// Populist iff `fraction >= threshold`.
    pub fn classify(&self, fraction: f64) -> Result<BinaryLabel, StumpError> {
        check_fraction(fraction)?;
        Ok(match self.degenerate {
            Some(Degenerate::AllPopulist) => BinaryLabel::Populist,
            Some(Degenerate::AllNonPopulist) => BinaryLabel::NonPopulist,
            None => BinaryLabel::from_bool(fraction >= self.threshold),
        })
    }

    pub fn classify_all(&self, fractions: &[f64]) -> Result<Vec<BinaryLabel>, StumpError> {
        fractions.iter().map(|&f| self.classify(f)).collect()
    }
}

fn check_fraction(f: f64) -> Result<(), StumpError> {
    if !(0.0..=1.0).contains(&f) {
        return Err(StumpError::FractionOutOfRange(f));
    }
    Ok(())
}

pub fn classify(stump: &Stump, fraction: f64) -> Result<BinaryLabel, StumpError> {
    stump.classify(fraction)
}

fn check_inputs(fractions: &[f64], labels: &[BinaryLabel]) -> Result<Option<Degenerate>, StumpError> {
    if fractions.len() != labels.len() {
        return Err(StumpError::LengthMismatch(fractions.len(), labels.len()));
    }
    if fractions.len() < 2 {
        return Err(StumpError::TooFew(fractions.len()));
    }
    for &f in fractions {
        check_fraction(f)?;
    }
    let pos = labels.iter().filter(|l| l.is_populist()).count();
    Ok(if pos == labels.len() {
        Some(Degenerate::AllPopulist)
    } else if pos == 0 {
        Some(Degenerate::AllNonPopulist)
    } else {
        None
    })
}

/// Weighted Gini impurity times n for a node with `pos` positives out of
/// `n`: `n - (pos^2 + neg^2) / n`.
fn scaled_gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (p, q, n) = (pos as f64, (n - pos) as f64, n as f64);
    n - (p * p + q * q) / n
}

/// Midpoints between consecutive distinct values of a sorted slice.
fn midpoints(sorted: &[(f64, bool)]) -> Vec<f64> {
    let mut out = Vec::new();
    for w in sorted.windows(2) {
        if w[1].0 > w[0].0 {
            out.push(w[0].0 + (w[1].0 - w[0].0) / 2.0);
        }
    }
    out
}

/// Weighted Gini impurity of splitting `sorted` at each threshold (left is
/// `fraction < threshold`). `thresholds` must be ascending.
fn split_impurities(sorted: &[(f64, bool)], thresholds: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    let total_pos = sorted.iter().filter(|o| o.1).count();
    let (mut left_n, mut left_pos) = (0, 0);
    thresholds
        .iter()
        .map(|&t| {
            while left_n < n && sorted[left_n].0 < t {
                left_pos += usize::from(sorted[left_n].1);
                left_n += 1;
            }
            (scaled_gini(left_pos, left_n) + scaled_gini(total_pos - left_pos, n - left_n)) / n as f64
        })
        .collect()
}

/// Gini-optimal midpoint split over `(fraction, populist)` observations as
/// `(threshold, impurity)`. Ties go to the smaller threshold. `None` when
/// fewer than two distinct fractions exist.
pub fn best_split(obs: &mut [(f64, bool)]) -> Option<(f64, f64)> {
    obs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cands = midpoints(obs);
    let imp = split_impurities(obs, &cands);
    let mut best: Option<(f64, f64)> = None;
    for (&t, &g) in cands.iter().zip(&imp) {
        if best.is_none_or(|(_, b)| g < b) {
            best = Some((t, g));
        }
    }
    best
}

fn histogram(mut thresholds: Vec<f64>) -> Vec<HistogramBin> {
    thresholds.sort_by(|a, b| a.total_cmp(b));
    let mut bins: Vec<HistogramBin> = Vec::new();
    for t in thresholds {
        match bins.last_mut() {
            Some(b) if b.threshold == t => b.count += 1,
            _ => bins.push(HistogramBin { threshold: t, count: 1 }),
        }
    }
    bins
}

/// All fractions equal, so no split exists: label everything with the
/// majority class (populist on a tie).
fn constant_feature_stump(obs: &[(f64, bool)], runs: usize, seed: u64) -> Stump {
    let pos = obs.iter().filter(|o| o.1).count();
    let kind = if 2 * pos >= obs.len() {
        Degenerate::AllPopulist
    } else {
        Degenerate::AllNonPopulist
    };
    Stump::degenerate(kind, runs, seed)
}

fn observations(fractions: &[f64], labels: &[BinaryLabel]) -> Vec<(f64, bool)> {
    let mut obs: Vec<(f64, bool)> = fractions.iter().copied().zip(labels.iter().map(|l| l.is_populist())).collect();
    obs.sort_by(|a, b| a.0.total_cmp(&b.0));
    obs
}

/// One fit on the full data, no resampling.
pub fn fit_stump_deterministic(fractions: &[f64], labels: &[BinaryLabel]) -> Result<Stump, StumpError> {
    if let Some(d) = check_inputs(fractions, labels)? {
        return Ok(Stump::degenerate(d, 1, 0));
    }
    let mut obs = observations(fractions, labels);
    let Some((threshold, _)) = best_split(&mut obs) else {
        return Ok(constant_feature_stump(&obs, 1, 0));
    };
    Ok(Stump {
        threshold,
        degenerate: None,
        runs: 1,
        seed: 0,
        modal_count: 1,
        histogram: alloc::vec![HistogramBin { threshold, count: 1 }],
    })
}

/// Modal threshold over `runs` bootstrap fits.
///
/// Candidates are the midpoints of the full data. Each run ranks them by
/// Gini impurity on its resample, breaking ties by impurity on the full
/// data and then by the smaller threshold. Run `r` draws its resample from
/// a seed derived from `(seed, r)`, so runs are independent of each other
/// and of evaluation order. Modal ties go to the smaller threshold.
pub fn fit_stump(fractions: &[f64], labels: &[BinaryLabel], runs: usize, seed: u64) -> Result<Stump, StumpError> {
    if runs == 0 {
        return Err(StumpError::NoRuns);
    }
    if let Some(d) = check_inputs(fractions, labels)? {
        return Ok(Stump::degenerate(d, runs, seed));
    }
    let obs = observations(fractions, labels);
    let cands = midpoints(&obs);
    if cands.is_empty() {
        return Ok(constant_feature_stump(&obs, runs, seed));
    }
    let full = split_impurities(&obs, &cands);
    let n = obs.len();
    let mut thresholds = Vec::with_capacity(runs);
    let mut sample = Vec::with_capacity(n);
    for run in 0..runs {
        let mut r = rng(derive_seed(seed, &(run as u64).to_le_bytes()));
        sample.clear();
        sample.extend((0..n).map(|_| obs[r.gen_range(0..n)]));
        sample.sort_by(|a, b| a.0.total_cmp(&b.0));
        let boot = split_impurities(&sample, &cands);
        let mut best = 0;
        for k in 1..cands.len() {
            if (boot[k], full[k]) < (boot[best], full[best]) {
                best = k;
            }
        }
        thresholds.push(cands[best]);
    }
    let bins = histogram(thresholds);
    let mut modal = bins[0];
    for b in &bins[1..] {
        if b.count > modal.count {
            modal = *b;
        }
    }
    Ok(Stump {
        threshold: modal.threshold,
        degenerate: None,
        runs,
        seed,
        modal_count: modal.count,
        histogram: bins,
    })
}

/// Fits a stump in the given mode. `Cv` fits like `Bootstrap`; use
/// [`cross_validated_labels`] for out-of-sample labels.
pub fn fit_with_mode(
    mode: ThresholdMode,
    fractions: &[f64],
    labels: &[BinaryLabel],
    runs: usize,
    seed: u64,
) -> Result<Stump, StumpError> {
    match mode {
        ThresholdMode::Deterministic => fit_stump_deterministic(fractions, labels),
        ThresholdMode::Bootstrap | ThresholdMode::Cv => fit_stump(fractions, labels, runs, seed),
    }
}

pub const DEFAULT_CV_FOLDS: usize = 5;

/// Labels each item with a stump fit on the other folds.
pub fn cross_validated_labels(
    fractions: &[f64],
    labels: &[BinaryLabel],
    folds: usize,
    runs: usize,
    seed: u64,
) -> Result<Vec<BinaryLabel>, StumpError> {
    check_inputs(fractions, labels)?;
    let n = fractions.len();
    let folds = folds.clamp(2, n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut r = rng(derive_seed(seed, b"cv-folds"));
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut r);
    let mut fold_of = alloc::vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    let mut out = alloc::vec![BinaryLabel::NonPopulist; n];
    for k in 0..folds {
        let (mut tf, mut tl) = (Vec::new(), Vec::new());
        for i in (0..n).filter(|&i| fold_of[i] != k) {
            tf.push(fractions[i]);
            tl.push(labels[i]);
        }
        let stump = if tf.len() >= 2 {
            fit_stump(&tf, &tl, runs, derive_seed(seed, &(k as u64).to_le_bytes()))?
        } else if tl.first().is_some_and(|l| l.is_populist()) {
            Stump::degenerate(Degenerate::AllPopulist, runs, seed)
        } else {
            Stump::degenerate(Degenerate::AllNonPopulist, runs, seed)
        };
        for i in (0..n).filter(|&i| fold_of[i] == k) {
            out[i] = stump.classify(fractions[i])?;
        }
    }
    Ok(out)
}
