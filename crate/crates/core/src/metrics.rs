//! Binary classification metrics with populist as the positive class,
//! AuROC by pairwise concordance, and squared Pearson correlation.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::BinaryLabel;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} predictions vs {1} truths")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("AuROC undefined: truths contain a single class")]
    AurocUndefined,
    #[error("correlation undefined: constant input")]
    CorrelationUndefined,
    #[error("score is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Positives in the ground truth.
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }
}

/// Tallies predictions against truths.
pub fn confusion(preds: &[BinaryLabel], truths: &[BinaryLabel]) -> Result<ConfusionMatrix, MetricsError> {
    if preds.len() != truths.len() {
        return Err(MetricsError::LengthMismatch(preds.len(), truths.len()));
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in preds.iter().zip(truths) {
        match (p.is_populist(), t.is_populist()) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// F-beta from precision and recall; 0 when both are 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    ratio((1.0 + b2) * precision * recall, b2 * precision + recall)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f2: f64,
    pub mcc: f64,
    pub confusion: ConfusionMatrix,
}

/// Accuracy, precision, recall, F1, F2 and MCC from a confusion matrix.
/// Empty denominators yield 0.
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<ClassificationMetrics, MetricsError> {
    if cm.total() == 0 {
        return Err(MetricsError::Empty);
    }
    let (tp, fp, fn_) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    // Exact integer products keep MCC symmetric under swapping fp and fn.
    let (itp, ifp, ifn, itn) = (cm.tp as u128, cm.fp as u128, cm.fn_ as u128, cm.tn as u128);
    let mcc_num = ((itp * itn) as i128 - (ifp * ifn) as i128) as f64;
    let mcc_den = libm::sqrt(((itp + ifp) * (itp + ifn) * (itn + ifp) * (itn + ifn)) as f64);
    Ok(ClassificationMetrics {
        accuracy: (cm.tp + cm.tn) as f64 / cm.total() as f64,
        precision,
        recall,
        f1: f_beta(precision, recall, 1.0),
        f2: f_beta(precision, recall, 2.0),
        mcc: ratio(mcc_num, mcc_den),
        confusion: *cm,
    })
}

/// Probability that a random positive scores above a random negative, ties
/// counting one half.
///
/// Computed from midranks in integer arithmetic (doubled ranks), which
/// equals the pairwise concordance count exactly.
pub fn auroc(scores: &[f64], truths: &[BinaryLabel]) -> Result<f64, MetricsError> {
    if scores.len() != truths.len() {
        return Err(MetricsError::LengthMismatch(scores.len(), truths.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let n_pos = truths.iter().filter(|t| t.is_populist()).count() as u64;
    let n_neg = truths.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::AurocUndefined);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum over positives of doubled midranks (1-based).
    let mut doubled_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1; doubled midrank = (i+1)+(j+1).
        let doubled = (i + j + 2) as u64;
        let pos_in_group = order[i..=j].iter().filter(|&&k| truths[k].is_populist()).count() as u64;
        doubled_rank_sum += doubled * pos_in_group;
        i = j + 1;
    }
    // 2U = 2*R_pos - n_pos(n_pos+1) = 2*concordant + ties.
    let twice_u = doubled_rank_sum - n_pos * (n_pos + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

/// Squared Pearson correlation.
pub fn r_squared(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricsError::CorrelationUndefined);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::CorrelationUndefined);
    }
    let r2 = (sxy * sxy) / (sxx * syy);
    Ok(r2.min(1.0))
}

/// One evaluation row, named like a results table: n, accuracy, precision,
/// recall, f1, f2, auroc, mcc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub n: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f2: f64,
    pub auroc: Option<f64>,
    pub mcc: f64,
}

impl MetricsRow {
    pub fn new(m: &ClassificationMetrics, auroc: Option<f64>) -> Self {
        MetricsRow {
            n: m.confusion.total() as usize,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            f2: m.f2,
            auroc,
            mcc: m.mcc,
        }
    }
}

/// Full binary evaluation of scored items: labels from `preds`, AuROC from
/// `scores` when both truth classes are present.
pub fn evaluate_binary(
    scores: &[f64],
    preds: &[BinaryLabel],
    truths: &[BinaryLabel],
) -> Result<(ClassificationMetrics, Option<f64>), MetricsError> {
    let cm = confusion(preds, truths)?;
    let m = classification_metrics(&cm)?;
    let auc = match auroc(scores, truths) {
        Ok(a) => Some(a),
        Err(MetricsError::AurocUndefined) => None,
        Err(e) => return Err(e),
    };
    Ok((m, auc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use BinaryLabel::{NonPopulist as N, Populist as P};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn confusion_examples() {
        assert_eq!(confusion(&[P, N], &[P, N]).unwrap(), ConfusionMatrix::new(1, 0, 0, 1));
        let inv = confusion(&[N, P], &[P, N]).unwrap();
        assert_eq!((inv.tp, inv.tn), (0, 0));
        assert_eq!(confusion(&[P, P, N], &[P, N, N]).unwrap(), ConfusionMatrix::new(1, 1, 0, 1));
        assert_eq!(confusion(&[P], &[P, N]).unwrap_err(), MetricsError::LengthMismatch(1, 2));
        assert_eq!(confusion(&[], &[]).unwrap_err(), MetricsError::Empty);
    }

    #[test]
    fn perfect_classifier() {
        let m = classification_metrics(&ConfusionMatrix::new(1, 0, 0, 1)).unwrap();
        for v in [m.accuracy, m.precision, m.recall, m.f1, m.f2, m.mcc] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn two_two_one_one() {
        let m = classification_metrics(&ConfusionMatrix::new(2, 1, 1, 2)).unwrap();
        assert!(close(m.precision, 2.0 / 3.0));
        assert!(close(m.recall, 2.0 / 3.0));
        assert!(close(m.f1, 2.0 / 3.0));
        assert!(close(m.f2, 2.0 / 3.0));
        assert!(close(m.mcc, 1.0 / 3.0));
    }

    #[test]
    fn f2_from_reported_precision_recall() {
        let f2 = f_beta(0.85, 0.89, 2.0);
        let oracle = 5.0 * 0.85 * 0.89 / (4.0 * 0.85 + 0.89);
        assert!(close(f2, oracle));
        assert!((f2 - 0.88).abs() < 0.005);
    }

    #[test]
    fn zero_denominators() {
        let m = classification_metrics(&ConfusionMatrix::new(0, 0, 0, 5)).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.f2, m.mcc), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(classification_metrics(&ConfusionMatrix::default()).unwrap_err(), MetricsError::Empty);
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.9, 0.8, 0.1], &[P, P, N]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5, 0.5], &[P, N]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.8, 0.6, 0.4, 0.2], &[P, N, P, N]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.1, 0.2], &[P, P]).unwrap_err(), MetricsError::AurocUndefined);
    }

    #[test]
    fn r_squared_examples() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: alloc::vec::Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!(close(r_squared(&x, &y).unwrap(), 1.0));
        assert_eq!(r_squared(&[-1.0, 0.0, 1.0], &[1.0, -2.0, 1.0]).unwrap(), 0.0);
        assert_eq!(r_squared(&[1.0, 1.0], &[0.0, 1.0]).unwrap_err(), MetricsError::CorrelationUndefined);
        assert_eq!(r_squared(&[0.0, 1.0], &[1.0, 1.0]).unwrap_err(), MetricsError::CorrelationUndefined);
    }

    #[test]
    fn evaluate_without_both_classes_has_no_auroc() {
        let (m, auc) = evaluate_binary(&[0.1, 0.2], &[N, N], &[N, N]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(auc, None);
        let (_, auc) = evaluate_binary(&[0.1, 0.9], &[N, P], &[N, P]).unwrap();
        assert_eq!(auc, Some(1.0));
    }
}
