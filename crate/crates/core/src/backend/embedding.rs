//! Sentence-embedding backend with contrastive fine-tuning.
//!
//! A frozen sentence encoder produces unit vectors. A square linear adapter
//! on top of it (initialized to the identity) is fine-tuned on sentence
//! pairs: same-category pairs are pulled toward cosine 1, cross-category
//! pairs toward cosine 0, with a squared-error loss. A classification head
//! is then fit on the adapted embeddings.
//!
//! Variant flags:
//! - `differential_head`: the head is a softmax layer trained by minibatch
//!   SGD instead of a regularized logistic regression fit to convergence.
//! - `end_to_end`: after the head is fit, adapter and head are trained
//!   jointly on the classification loss.
//! - `alternate_embedding_model`: use the alternate encoder.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BackendError, VariantFlags};
use crate::corpus::{Category, TrainingSentence};
use crate::leakage::tokens;
use crate::linalg::{argmax, dot, matvec, normalize, softmax};
use crate::seed::rng;
use crate::Fingerprint;

/// Numeric settings of the embedding backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingSettings {
    /// Output width of the built-in hashed encoders.
    pub dim: usize,
    /// Pair-generation passes over the training sentences; each pass emits
    /// one positive and one negative pair per sentence.
    pub pair_iterations: usize,
    pub body_learning_rate: f64,
    pub head_learning_rate: f64,
    /// Epochs of the minibatch (differential) head.
    pub head_epochs: usize,
    /// Gradient steps of the logistic-regression head.
    pub head_iterations: usize,
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        EmbeddingSettings {
            dim: 128,
            pair_iterations: 20,
            body_learning_rate: 0.05,
            head_learning_rate: 0.5,
            head_epochs: 10,
            head_iterations: 300,
        }
    }
}

/// Feature-hashing encoder over word unigrams, word bigrams and character
/// n-grams of each word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedEncoder {
    pub dim: usize,
    pub seed: u64,
    pub min_ngram: usize,
    pub max_ngram: usize,
    pub bigrams: bool,
}

impl HashedEncoder {
    pub fn base(dim: usize) -> Self {
        HashedEncoder {
            dim,
            seed: 0x5e17_7e4c_0de5_0001,
            min_ngram: 3,
            max_ngram: 5,
            bigrams: true,
        }
    }

    pub fn alternate(dim: usize) -> Self {
        HashedEncoder {
            dim,
            seed: 0xb6e3_0000_0000_0003,
            min_ngram: 2,
            max_ngram: 4,
            bigrams: false,
        }
    }

    fn add(&self, out: &mut [f64], kind: u8, feature: &[u8], weight: f64) {
        let mut fp = Fingerprint::new();
        fp.write(&self.seed.to_le_bytes());
        fp.write(&[kind]);
        fp.write(feature);
        let h = fp.finish();
        let idx = (h % self.dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        out[idx] += sign * weight;
    }

    pub fn encode(&self, text: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let toks = tokens(text);
        for t in &toks {
            self.add(&mut out, b'w', t.as_bytes(), 1.0);
            let padded: Vec<char> = core::iter::once('<').chain(t.chars()).chain(core::iter::once('>')).collect();
            let mut grams = Vec::new();
            for n in self.min_ngram..=self.max_ngram {
                if padded.len() < n {
                    break;
                }
                for w in padded.windows(n) {
                    grams.push(w.iter().collect::<String>());
                }
            }
            if !grams.is_empty() {
                let wgt = 1.0 / libm::sqrt(grams.len() as f64);
                for g in &grams {
                    self.add(&mut out, b'c', g.as_bytes(), wgt);
                }
            }
        }
        if self.bigrams {
            for pair in toks.windows(2) {
                let mut b = String::with_capacity(pair[0].len() + pair[1].len() + 1);
                b.push_str(&pair[0]);
                b.push(' ');
                b.push_str(&pair[1]);
                self.add(&mut out, b'b', b.as_bytes(), 1.0);
            }
        }
        normalize(&mut out);
        out
    }
}

/// Pretrained word vectors, mean-pooled into sentence embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    name: String,
    dim: usize,
    table: BTreeMap<String, Vec<f32>>,
    fingerprint: u64,
}

impl WordVectors {
    pub fn new(name: impl Into<String>, dim: usize, table: BTreeMap<String, Vec<f32>>) -> Result<Self, BackendError> {
        let mut fp = Fingerprint::new();
        fp.write(&(dim as u64).to_le_bytes());
        for (w, v) in &table {
            if v.len() != dim {
                return Err(BackendError::Encoder(alloc::format!(
                    "vector for {w:?} has {} dims, expected {dim}",
                    v.len()
                )));
            }
            fp.write_field(w.as_bytes());
            for x in v {
                fp.write(&x.to_le_bytes());
            }
        }
        Ok(WordVectors {
            name: name.into(),
            dim,
            table,
            fingerprint: fp.finish(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    fn encode(&self, text: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for t in tokens(text) {
            if let Some(v) = self.table.get(&t) {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += f64::from(*x);
                }
            }
        }
        normalize(&mut out);
        out
    }
}

/// Serialized form of a word-vector encoder: the table itself is not
/// stored with a model and must be re-attached after loading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorEncoder {
    pub name: String,
    pub dim: usize,
    pub fingerprint: u64,
    #[serde(skip)]
    vectors: Option<Arc<WordVectors>>,
}

impl PartialEq for VectorEncoder {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.dim == other.dim && self.fingerprint == other.fingerprint
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoder {
    Hashed(HashedEncoder),
    Vectors(VectorEncoder),
}

impl Encoder {
    pub fn from_vectors(v: Arc<WordVectors>) -> Self {
        Encoder::Vectors(VectorEncoder {
            name: v.name.clone(),
            dim: v.dim,
            fingerprint: v.fingerprint,
            vectors: Some(v),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Encoder::Hashed(h) => h.dim,
            Encoder::Vectors(v) => v.dim,
        }
    }

    pub fn encode(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        match self {
            Encoder::Hashed(h) => Ok(h.encode(text)),
            Encoder::Vectors(v) => match &v.vectors {
                Some(table) => Ok(table.encode(text)),
                None => Err(BackendError::EncoderNotLoaded(v.name.clone())),
            },
        }
    }

    /// Names the word vectors this encoder needs, if it is not loaded.
    pub fn missing_vectors(&self) -> Option<&str> {
        match self {
            Encoder::Vectors(v) if v.vectors.is_none() => Some(&v.name),
            _ => None,
        }
    }

    /// Re-attaches word vectors after deserialization.
    pub fn attach(&mut self, vectors: Arc<WordVectors>) -> Result<(), BackendError> {
        match self {
            Encoder::Vectors(v) if v.name == vectors.name => {
                if v.fingerprint != vectors.fingerprint {
                    return Err(BackendError::Encoder(alloc::format!(
                        "word vectors {:?} changed since the model was trained",
                        v.name
                    )));
                }
                v.vectors = Some(vectors);
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Encoders available to the embedding backend.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSet {
    pub base: Encoder,
    pub alternate: Encoder,
}

impl EncoderSet {
    pub fn hashed(dim: usize) -> Self {
        EncoderSet {
            base: Encoder::Hashed(HashedEncoder::base(dim)),
            alternate: Encoder::Hashed(HashedEncoder::alternate(dim)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub(crate) encoder: Encoder,
    dim: usize,
    /// Row-major `dim x dim`.
    adapter: Vec<f64>,
    /// Row-major `3 x dim`.
    head: Vec<f64>,
    bias: [f64; 3],
}

struct Forward {
    u: Vec<f64>,
    norm: f64,
    z: Vec<f64>,
}

impl EmbeddingModel {
    fn forward(&self, x: &[f64]) -> Forward {
        let u = matvec(&self.adapter, self.dim, self.dim, x);
        let norm = crate::linalg::norm(&u);
        let z = if norm > 0.0 { u.iter().map(|v| v / norm).collect() } else { u.clone() };
        Forward { u, norm, z }
    }

    fn logits(&self, z: &[f64]) -> [f64; 3] {
        let d = self.dim;
        let mut out = self.bias;
        for (c, o) in out.iter_mut().enumerate() {
            *o += dot(&self.head[c * d..(c + 1) * d], z);
        }
        out
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        let x = self.encoder.encode(text)?;
        Ok(self.forward(&x).z)
    }

    pub fn classify(&self, text: &str) -> Result<Category, BackendError> {
        let z = self.embed(text)?;
        Ok(Category::from_index(argmax(&self.logits(&z))).expect("three logits"))
    }

    pub fn encoder_mut(&mut self) -> &mut Encoder {
        &mut self.encoder
    }

    pub fn fit(
        settings: &EmbeddingSettings,
        variants: VariantFlags,
        encoders: &EncoderSet,
        labeled: &[TrainingSentence],
        epochs: usize,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self, BackendError> {
        let encoder = if variants.alternate_embedding_model {
            encoders.alternate.clone()
        } else {
            encoders.base.clone()
        };
        let dim = encoder.dim();
        if dim == 0 {
            return Err(BackendError::Encoder("encoder has zero width".into()));
        }
        let xs: Vec<Vec<f64>> = labeled.iter().map(|s| encoder.encode(&s.text)).collect::<Result<_, _>>()?;
        let ys: Vec<usize> = labeled.iter().map(|s| s.category.index()).collect();

        let mut adapter = vec![0.0; dim * dim];
        for i in 0..dim {
            adapter[i * dim + i] = 1.0;
        }
        let mut model = EmbeddingModel {
            encoder,
            dim,
            adapter,
            head: vec![0.0; 3 * dim],
            bias: [0.0; 3],
        };
        let mut r = rng(seed);

        let pairs = generate_pairs(&ys, settings.pair_iterations, &mut r);
        for _ in 0..epochs {
            let mut order: Vec<usize> = (0..pairs.len()).collect();
            order.shuffle(&mut r);
            for batch in order.chunks(batch_size) {
                model.contrastive_step(&xs, &pairs, batch, settings.body_learning_rate);
            }
        }

        let zs: Vec<Vec<f64>> = xs.iter().map(|x| model.forward(x).z).collect();
        if variants.differential_head {
            for _ in 0..settings.head_epochs.max(1) {
                let mut order: Vec<usize> = (0..zs.len()).collect();
                order.shuffle(&mut r);
                for batch in order.chunks(batch_size) {
                    model.head_step(&zs, &ys, batch, settings.head_learning_rate, 0.0);
                }
            }
        } else {
            let all: Vec<usize> = (0..zs.len()).collect();
            for _ in 0..settings.head_iterations {
                model.head_step(&zs, &ys, &all, settings.head_learning_rate * 4.0, 1e-3);
            }
        }

        if variants.end_to_end {
            for _ in 0..epochs {
                let mut order: Vec<usize> = (0..xs.len()).collect();
                order.shuffle(&mut r);
                for batch in order.chunks(batch_size) {
                    model.joint_step(&xs, &ys, batch, settings.body_learning_rate, settings.head_learning_rate);
                }
            }
        }
        Ok(model)
    }

    /// SGD step on the mean squared cosine error of a batch of pairs.
    fn contrastive_step(&mut self, xs: &[Vec<f64>], pairs: &[Pair], batch: &[usize], lr: f64) {
        let d = self.dim;
        let mut grad = vec![0.0; d * d];
        let scale = 1.0 / batch.len() as f64;
        for &p in batch {
            let Pair { a, b, target } = pairs[p];
            let (fa, fb) = (self.forward(&xs[a]), self.forward(&xs[b]));
            if fa.norm == 0.0 || fb.norm == 0.0 {
                continue;
            }
            let cos = dot(&fa.z, &fb.z);
            let g = 2.0 * (cos - target) * scale;
            // d cos / d u = (z_b - cos z_a) / |u|, and symmetrically for v.
            for i in 0..d {
                let du = g * (fb.z[i] - cos * fa.z[i]) / fa.norm;
                let dv = g * (fa.z[i] - cos * fb.z[i]) / fb.norm;
                let row = &mut grad[i * d..(i + 1) * d];
                for j in 0..d {
                    row[j] += du * xs[a][j] + dv * xs[b][j];
                }
            }
        }
        for (w, g) in self.adapter.iter_mut().zip(&grad) {
            *w -= lr * g;
        }
    }

    /// Gradient step of mean cross-entropy (plus L2) on the head only.
    fn head_step(&mut self, zs: &[Vec<f64>], ys: &[usize], batch: &[usize], lr: f64, l2: f64) {
        let d = self.dim;
        let mut gh = vec![0.0; 3 * d];
        let mut gb = [0.0; 3];
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let mut p = self.logits(&zs[i]);
            softmax(&mut p);
            p[ys[i]] -= 1.0;
            for c in 0..3 {
                gb[c] += p[c] * scale;
                for (g, z) in gh[c * d..(c + 1) * d].iter_mut().zip(&zs[i]) {
                    *g += p[c] * z * scale;
                }
            }
        }
        for (w, g) in self.head.iter_mut().zip(&gh) {
            *w -= lr * (g + l2 * *w);
        }
        for (b, g) in self.bias.iter_mut().zip(gb) {
            *b -= lr * g;
        }
    }

    /// Joint cross-entropy step through head, normalization and adapter.
    fn joint_step(&mut self, xs: &[Vec<f64>], ys: &[usize], batch: &[usize], body_lr: f64, head_lr: f64) {
        let d = self.dim;
        let mut ga = vec![0.0; d * d];
        let mut gh = vec![0.0; 3 * d];
        let mut gb = [0.0; 3];
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let f = self.forward(&xs[i]);
            if f.norm == 0.0 {
                continue;
            }
            let mut p = self.logits(&f.z);
            softmax(&mut p);
            p[ys[i]] -= 1.0;
            let mut dz = vec![0.0; d];
            for c in 0..3 {
                gb[c] += p[c] * scale;
                let row = &self.head[c * d..(c + 1) * d];
                for k in 0..d {
                    gh[c * d + k] += p[c] * f.z[k] * scale;
                    dz[k] += p[c] * row[k];
                }
            }
            // du = (I - z z^T) dz / |u|
            let proj = dot(&dz, &f.z);
            for k in 0..d {
                let du = (dz[k] - proj * f.z[k]) / f.norm * scale;
                let row = &mut ga[k * d..(k + 1) * d];
                for (g, x) in row.iter_mut().zip(&xs[i]) {
                    *g += du * x;
                }
            }
            debug_assert_eq!(f.u.len(), d);
        }
        for (w, g) in self.adapter.iter_mut().zip(&ga) {
            *w -= body_lr * g;
        }
        for (w, g) in self.head.iter_mut().zip(&gh) {
            *w -= head_lr * g;
        }
        for (b, g) in self.bias.iter_mut().zip(gb) {
            *b -= head_lr * g;
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pair {
    a: usize,
    b: usize,
    target: f64,
}

/// One positive and one negative partner per sentence per iteration.
fn generate_pairs<R: Rng>(ys: &[usize], iterations: usize, r: &mut R) -> Vec<Pair> {
    let mut by_class: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, &y) in ys.iter().enumerate() {
        by_class[y].push(i);
    }
    let mut pairs = Vec::with_capacity(2 * iterations * ys.len());
    for _ in 0..iterations {
        for (i, &y) in ys.iter().enumerate() {
            let same = &by_class[y];
            if same.len() > 1 {
                let mut j = same[r.gen_range(0..same.len() - 1)];
                if j == i {
                    j = same[same.len() - 1];
                }
                pairs.push(Pair { a: i, b: j, target: 1.0 });
            }
            let others = ys.len() - same.len();
            if others > 0 {
                let mut k = r.gen_range(0..others);
                let mut neg = None;
                for (c, members) in by_class.iter().enumerate() {
                    if c == y {
                        continue;
                    }
                    if k < members.len() {
                        neg = Some(members[k]);
                        break;
                    }
                    k -= members.len();
                }
                pairs.push(Pair {
                    a: i,
                    b: neg.expect("index within other classes"),
                    target: 0.0,
                });
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    #[test]
    fn hashed_encoder_is_unit_norm_and_deterministic() {
        let e = HashedEncoder::base(64);
        let a = e.encode("The corrupt elite betrayed us.");
        assert!((crate::linalg::norm(&a) - 1.0).abs() < 1e-12);
        assert_eq!(a, e.encode("the corrupt elite betrayed us"));
        assert!(e.encode("...").iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pairs_have_expected_partners() {
        let ys = [0, 0, 1, 1, 2, 2];
        let mut r = rng(1);
        let pairs = generate_pairs(&ys, 3, &mut r);
        assert_eq!(pairs.len(), 36);
        for p in &pairs {
            if p.target == 1.0 {
                assert_eq!(ys[p.a], ys[p.b]);
                assert_ne!(p.a, p.b);
            } else {
                assert_ne!(ys[p.a], ys[p.b]);
            }
        }
    }

    #[test]
    fn contrastive_gradient_matches_finite_differences() {
        let enc = EncoderSet::hashed(8);
        let texts = ["alpha beta", "beta gamma", "delta epsilon"];
        let xs: Vec<Vec<f64>> = texts.iter().map(|t| enc.base.encode(t).unwrap()).collect();
        let mut r = rng(3);
        let mut adapter = vec![0.0; 64];
        for a in adapter.iter_mut() {
            *a = r.gen_range(-1.0..1.0);
        }
        let model = EmbeddingModel {
            encoder: enc.base.clone(),
            dim: 8,
            adapter,
            head: vec![0.0; 24],
            bias: [0.0; 3],
        };
        let pairs = [Pair { a: 0, b: 1, target: 1.0 }, Pair { a: 0, b: 2, target: 0.0 }];
        let loss = |m: &EmbeddingModel| -> f64 {
            pairs
                .iter()
                .map(|p| {
                    let c = dot(&m.forward(&xs[p.a]).z, &m.forward(&xs[p.b]).z);
                    (c - p.target) * (c - p.target)
                })
                .sum::<f64>()
                / pairs.len() as f64
        };
        // One step with lr = 1 moves the adapter by exactly -grad.
        let mut stepped = model.clone();
        stepped.contrastive_step(&xs, &pairs, &[0, 1], 1.0);
        let h = 1e-6;
        for k in [0usize, 9, 27, 63] {
            let analytic = model.adapter[k] - stepped.adapter[k];
            let mut plus = model.clone();
            plus.adapter[k] += h;
            let mut minus = model.clone();
            minus.adapter[k] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((analytic - numeric).abs() < 1e-6, "k={k}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn joint_gradient_matches_finite_differences() {
        let enc = EncoderSet::hashed(6);
        let texts = ["alpha beta", "beta gamma", "delta epsilon"];
        let xs: Vec<Vec<f64>> = texts.iter().map(|t| enc.base.encode(t).unwrap()).collect();
        let ys = [0usize, 1, 2];
        let mut r = rng(5);
        let rand_vec = |n: usize, r: &mut rand_chacha::ChaCha8Rng| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let model = EmbeddingModel {
            encoder: enc.base.clone(),
            dim: 6,
            adapter: rand_vec(36, &mut r),
            head: rand_vec(18, &mut r),
            bias: [0.1, -0.2, 0.05],
        };
        let loss = |m: &EmbeddingModel| -> f64 {
            (0..3)
                .map(|i| {
                    let mut p = m.logits(&m.forward(&xs[i]).z);
                    softmax(&mut p);
                    -libm::log(p[ys[i]])
                })
                .sum::<f64>()
                / 3.0
        };
        let mut stepped = model.clone();
        stepped.joint_step(&xs, &ys, &[0, 1, 2], 1.0, 1.0);
        let h = 1e-6;
        for k in [0usize, 7, 20, 35] {
            let analytic = model.adapter[k] - stepped.adapter[k];
            let mut plus = model.clone();
            plus.adapter[k] += h;
            let mut minus = model.clone();
            minus.adapter[k] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((analytic - numeric).abs() < 1e-6, "adapter k={k}: {analytic} vs {numeric}");
        }
        for k in [0usize, 5, 11, 17] {
            let analytic = model.head[k] - stepped.head[k];
            let mut plus = model.clone();
            plus.head[k] += h;
            let mut minus = model.clone();
            minus.head[k] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((analytic - numeric).abs() < 1e-6, "head k={k}: {analytic} vs {numeric}");
        }
    }

    #[test]
    fn unloaded_vectors_error() {
        let mut table = BTreeMap::new();
        table.insert(String::from("a"), vec![1.0f32, 0.0]);
        let wv = Arc::new(WordVectors::new("toy", 2, table).unwrap());
        let enc = Encoder::from_vectors(wv.clone());
        assert_eq!(enc.encode("a").unwrap(), vec![1.0, 0.0]);
        let mut restored = match &enc {
            Encoder::Vectors(v) => Encoder::Vectors(VectorEncoder { vectors: None, ..v.clone() }),
            _ => unreachable!(),
        };
        assert_eq!(restored.missing_vectors(), Some("toy"));
        assert!(matches!(restored.encode("a"), Err(BackendError::EncoderNotLoaded(_))));
        restored.attach(wv).unwrap();
        assert_eq!(restored.encode("a").unwrap(), vec![1.0, 0.0]);
        let _ = format!("{restored:?}");
    }
}
