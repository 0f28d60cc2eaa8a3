//! Term-frequency softmax classifier.
//!
//! Features are L2-normalized term frequencies over normalized tokens. The
//! model is a bias-free multinomial linear classifier fit by full-batch
//! gradient descent from zero weights on a canonically sorted copy of the
//! training data, so the fit is independent of input order and seed.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Category, TrainingSentence};
use crate::leakage::tokens;
use crate::linalg::{argmax, softmax};

const ITERATIONS: usize = 200;
const LEARNING_RATE: f64 = 2.0;
const L2: f64 = 1e-4;

type Sparse = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalModel {
    vocab: BTreeMap<String, u32>,
    /// Row-major `[category][feature]`.
    weights: Vec<f64>,
    /// Fallback when a sentence has no known token.
    majority: Category,
}

fn featurize(vocab: &BTreeMap<String, u32>, text: &str) -> Sparse {
    let mut tf: BTreeMap<u32, f64> = BTreeMap::new();
    for t in tokens(text) {
        if let Some(&id) = vocab.get(&t) {
            *tf.entry(id).or_insert(0.0) += 1.0;
        }
    }
    let norm = libm::sqrt(tf.values().map(|v| v * v).sum::<f64>());
    tf.into_iter().map(|(k, v)| (k, v / norm)).collect()
}

impl LexicalModel {
    pub fn fit(labeled: &[TrainingSentence]) -> Self {
        let mut data: Vec<(&str, Category)> = labeled.iter().map(|s| (s.text.as_str(), s.category)).collect();
        data.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));

        let mut vocab = BTreeMap::new();
        for (text, _) in &data {
            for t in tokens(text) {
                vocab.entry(t).or_insert(0);
            }
        }
        for (i, v) in vocab.values_mut().enumerate() {
            *v = i as u32;
        }
        let v = vocab.len();
        let k = Category::ALL.len();

        let mut counts = [0usize; 3];
        for (_, c) in &data {
            counts[c.index()] += 1;
        }
        let majority = Category::from_index(counts.iter().enumerate().fold(0, |b, (i, &c)| if c > counts[b] { i } else { b }))
            .expect("index in range");

        let feats: Vec<(Sparse, usize)> = data.iter().map(|(t, c)| (featurize(&vocab, t), c.index())).collect();
        let mut w = vec![0.0; k * v];
        let mut grad = vec![0.0; k * v];
        let n = feats.len().max(1) as f64;
        for _ in 0..ITERATIONS {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (x, y) in &feats {
                let mut p = logits(&w, v, x);
                softmax(&mut p);
                p[*y] -= 1.0;
                for (c, pc) in p.iter().enumerate() {
                    for &(j, xj) in x {
                        grad[c * v + j as usize] += pc * xj;
                    }
                }
            }
            for (wi, gi) in w.iter_mut().zip(&grad) {
                *wi -= LEARNING_RATE * (gi / n + L2 * *wi);
            }
        }
        LexicalModel { vocab, weights: w, majority }
    }

    pub fn classify(&self, text: &str) -> Category {
        let x = featurize(&self.vocab, text);
        if x.is_empty() {
            return self.majority;
        }
        let l = logits(&self.weights, self.vocab.len(), &x);
        Category::from_index(argmax(&l)).expect("three logits")
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocab.len()
    }
}

fn logits(w: &[f64], v: usize, x: &Sparse) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        *o = x.iter().map(|&(j, xj)| w[c * v + j as usize] * xj).sum();
    }
    out
}
