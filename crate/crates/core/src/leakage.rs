//! Matching training sentences back to the speeches they were taken from,
//! so that a unit's model never trains on sentences from its own speeches.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Category, Corpus, SentenceKey, TrainingSentence};
use crate::Fingerprint;

pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LeakageError {
    #[error("match threshold {0} outside [0, 1]")]
    Threshold(f64),
    #[error("match index refers to speech {0:?} which is not in the corpus")]
    UnknownSpeech(String),
}

fn plain_equivalent(c: char) -> char {
    match c {
        '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' | '`' | '\u{00B4}' => '\'',
        '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' | '\u{00AB}' | '\u{00BB}' => '"',
        '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2015}' | '\u{2212}' => '-',
        '\u{00A0}' | '\u{2007}' | '\u{202F}' => ' ',
        other => other,
    }
}

/// Lowercases, maps typographic quotes and dashes to ASCII, removes all
/// punctuation and collapses whitespace.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars().map(plain_equivalent) {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if !c.is_alphanumeric() {
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.extend(c.to_lowercase());
    }
    out
}

/// Whitespace tokens of the normalized text.
pub fn tokens(text: &str) -> Vec<String> {
    normalize_text(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    PreLinked,
    Exact,
    Fuzzy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechMatch {
    pub speech_id: String,
    pub similarity: f64,
    pub method: MatchMethod,
}

struct PreparedSpeech {
    id: String,
    padded: String,
    tokens: Vec<u32>,
    token_set: Vec<u32>,
}

/// Corpus preprocessed for repeated matching: normalized texts and interned
/// token streams, ordered by speech id.
pub struct MatchCorpus {
    vocab: BTreeMap<String, u32>,
    speeches: Vec<PreparedSpeech>,
}

impl MatchCorpus {
    pub fn new(corpus: &Corpus) -> Self {
        let mut vocab = BTreeMap::new();
        let mut speeches: Vec<PreparedSpeech> = corpus
            .speeches()
            .iter()
            .map(|s| {
                let norm = normalize_text(&s.text);
                let tokens: Vec<u32> = norm
                    .split(' ')
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        let next = vocab.len() as u32;
                        *vocab.entry(String::from(t)).or_insert(next)
                    })
                    .collect();
                let mut token_set = tokens.clone();
                token_set.sort_unstable();
                token_set.dedup();
                let mut padded = String::with_capacity(norm.len() + 2);
                padded.push(' ');
                padded.push_str(&norm);
                padded.push(' ');
                PreparedSpeech {
                    id: s.id.clone(),
                    padded,
                    tokens,
                    token_set,
                }
            })
            .collect();
        speeches.sort_by(|a, b| a.id.cmp(&b.id));
        MatchCorpus { vocab, speeches }
    }

    pub fn contains_speech(&self, id: &str) -> bool {
        self.speeches.binary_search_by(|p| p.id.as_str().cmp(id)).is_ok()
    }

    /// Finds the source speech of a sentence.
    ///
    /// A speech whose normalized text contains the normalized sentence as a
    /// whole-token substring wins outright; failing that, any speech that
    /// contains it as a plain substring (a verbatim excerpt cut mid-word).
    /// Otherwise every window of the
    /// sentence's token length is compared by token-set Jaccard similarity;
    /// the best window at or above `threshold` wins, provided it shares at
    /// least one token. Ties go to the lowest speech id.
    pub fn match_text(&self, text: &str, threshold: f64) -> Option<SpeechMatch> {
        let norm = normalize_text(text);
        if norm.is_empty() {
            return None;
        }
        let mut needle = String::with_capacity(norm.len() + 2);
        needle.push(' ');
        needle.push_str(&norm);
        needle.push(' ');
        if let Some(p) = self.speeches.iter().find(|p| p.padded.contains(needle.as_str())) {
            return Some(SpeechMatch {
                speech_id: p.id.clone(),
                similarity: 1.0,
                method: MatchMethod::Exact,
            });
        }
        if let Some(p) = self.speeches.iter().find(|p| p.padded.contains(norm.as_str())) {
            return Some(SpeechMatch {
                speech_id: p.id.clone(),
                similarity: 1.0,
                method: MatchMethod::Exact,
            });
        }

        // Sentence tokens absent from every speech get ids past the vocab.
        let mut extra = 0u32;
        let base = self.vocab.len() as u32;
        let mut local: BTreeMap<&str, u32> = BTreeMap::new();
        let sent: Vec<u32> = norm
            .split(' ')
            .map(|t| match self.vocab.get(t) {
                Some(&id) => id,
                None => *local.entry(t).or_insert_with(|| {
                    extra += 1;
                    base + extra - 1
                }),
            })
            .collect();
        let mut sent_set = sent.clone();
        sent_set.sort_unstable();
        sent_set.dedup();
        let set_len = sent_set.len();
        let width = sent.len();

        let mut in_sentence = vec![false; self.vocab.len()];
        for &t in &sent_set {
            if (t as usize) < in_sentence.len() {
                in_sentence[t as usize] = true;
            }
        }
        let mut counts = vec![0u32; self.vocab.len()];

        let mut best: Option<(f64, &str)> = None;
        for p in &self.speeches {
            if p.tokens.is_empty() {
                continue;
            }
            let shared = sorted_intersection_len(&sent_set, &p.token_set);
            if shared == 0 {
                continue;
            }
            let bound = shared as f64 / set_len as f64;
            if bound < threshold || best.is_some_and(|(b, _)| bound <= b) {
                continue;
            }
            let sim = best_window_jaccard(&p.tokens, width, set_len, &in_sentence, &mut counts);
            if sim >= threshold && sim > 0.0 && best.is_none_or(|(b, _)| sim > b) {
                best = Some((sim, p.id.as_str()));
            }
        }
        best.map(|(sim, id)| SpeechMatch {
            speech_id: String::from(id),
            similarity: sim,
            method: MatchMethod::Fuzzy,
        })
    }

    /// Resolves a training sentence: a pre-linked source id that exists in
    /// the corpus is kept as-is, anything else goes through [`match_text`].
    ///
    /// [`match_text`]: MatchCorpus::match_text
    pub fn match_sentence(&self, sentence: &TrainingSentence, threshold: f64) -> Option<SpeechMatch> {
        if let Some(id) = &sentence.source_speech_id {
            if self.contains_speech(id) {
                return Some(SpeechMatch {
                    speech_id: id.clone(),
                    similarity: 1.0,
                    method: MatchMethod::PreLinked,
                });
            }
        }
        self.match_text(&sentence.text, threshold)
    }
}

fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Maximum token-set Jaccard similarity between the sentence set and any
/// window of `width` consecutive speech tokens. `counts` must be all zero on
/// entry and is left all zero.
fn best_window_jaccard(
    speech: &[u32],
    width: usize,
    set_len: usize,
    in_sentence: &[bool],
    counts: &mut [u32],
) -> f64 {
    let width = width.min(speech.len()).max(1);
    let mut distinct = 0usize;
    let mut inter = 0usize;
    let add = |t: u32, counts: &mut [u32], distinct: &mut usize, inter: &mut usize| {
        let c = &mut counts[t as usize];
        if *c == 0 {
            *distinct += 1;
            if in_sentence[t as usize] {
                *inter += 1;
            }
        }
        *c += 1;
    };
    for &t in &speech[..width] {
        add(t, counts, &mut distinct, &mut inter);
    }
    let jac = |inter: usize, distinct: usize| inter as f64 / (set_len + distinct - inter) as f64;
    let mut best = jac(inter, distinct);
    for i in width..speech.len() {
        let out = speech[i - width] as usize;
        counts[out] -= 1;
        if counts[out] == 0 {
            distinct -= 1;
            if in_sentence[out] {
                inter -= 1;
            }
        }
        add(speech[i], counts, &mut distinct, &mut inter);
        let j = jac(inter, distinct);
        if j > best {
            best = j;
        }
    }
    for &t in &speech[speech.len() - width..] {
        counts[t as usize] = 0;
    }
    best
}

/// One-shot convenience over [`MatchCorpus::match_sentence`].
pub fn match_sentence(sentence: &TrainingSentence, corpus: &Corpus, threshold: f64) -> Option<String> {
    MatchCorpus::new(corpus)
        .match_sentence(sentence, threshold)
        .map(|m| m.speech_id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub key: SentenceKey,
    pub category: Category,
    pub speech_id: Option<String>,
    pub similarity: f64,
    /// Occurrences of this sentence in the training list.
    pub occurrences: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRate {
    pub total: usize,
    pub matched: usize,
}

impl MatchRate {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }
}

/// Training sentence -> source speech map plus per-category match rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchIndex {
    threshold: f64,
    entries: BTreeMap<SentenceKey, MatchEntry>,
}

impl MatchIndex {
    pub fn empty(threshold: f64) -> Self {
        MatchIndex {
            threshold,
            entries: BTreeMap::new(),
        }
    }

    /// Assembles an index from independently computed matches.
    pub fn from_matches<'a, I>(threshold: f64, matches: I) -> Result<Self, LeakageError>
    where
        I: IntoIterator<Item = (&'a TrainingSentence, Option<SpeechMatch>)>,
    {
        check_threshold(threshold)?;
        let mut idx = MatchIndex::empty(threshold);
        for (s, m) in matches {
            let (speech_id, similarity) = match m {
                Some(m) => (Some(m.speech_id), m.similarity),
                None => (None, 0.0),
            };
            idx.insert(s.key(), s.category, speech_id, similarity);
        }
        Ok(idx)
    }

    /// Inserts one occurrence. Repeated keys only bump the occurrence count.
    pub fn insert(&mut self, key: SentenceKey, category: Category, speech_id: Option<String>, similarity: f64) {
        self.entries
            .entry(key)
            .and_modify(|e| e.occurrences += 1)
            .or_insert(MatchEntry {
                key,
                category,
                speech_id,
                similarity,
                occurrences: 1,
            });
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn entries(&self) -> impl Iterator<Item = &MatchEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn source_of(&self, key: SentenceKey) -> Option<&str> {
        self.entries.get(&key).and_then(|e| e.speech_id.as_deref())
    }

    pub fn matched_count(&self) -> usize {
        self.entries
            .values()
            .filter(|e| e.speech_id.is_some())
            .map(|e| e.occurrences)
            .sum()
    }

    pub fn rates(&self) -> BTreeMap<Category, MatchRate> {
        let mut out: BTreeMap<Category, MatchRate> = Category::ALL.iter().map(|&c| (c, MatchRate::default())).collect();
        for e in self.entries.values() {
            let r = out.get_mut(&e.category).expect("all categories present");
            r.total += e.occurrences;
            if e.speech_id.is_some() {
                r.matched += e.occurrences;
            }
        }
        out
    }

    pub fn rate(&self, category: Category) -> f64 {
        self.rates()[&category].rate()
    }

    /// Checks that every mapped speech exists in `corpus`.
    pub fn check_against(&self, corpus: &Corpus) -> Result<(), LeakageError> {
        for e in self.entries.values() {
            if let Some(id) = &e.speech_id {
                if !corpus.contains(id) {
                    return Err(LeakageError::UnknownSpeech(id.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let mut fp = Fingerprint::new();
        fp.write(&self.threshold.to_le_bytes());
        for e in self.entries.values() {
            fp.write(&e.key.0.to_le_bytes());
            fp.write_field(e.speech_id.as_deref().unwrap_or("").as_bytes());
            fp.write(&(e.occurrences as u64).to_le_bytes());
        }
        fp
    }
}

fn check_threshold(threshold: f64) -> Result<(), LeakageError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(LeakageError::Threshold(threshold));
    }
    Ok(())
}

/// Matches every training sentence against the corpus.
pub fn build_match_index(
    training: &[TrainingSentence],
    corpus: &Corpus,
    threshold: f64,
) -> Result<MatchIndex, LeakageError> {
    check_threshold(threshold)?;
    let prepared = MatchCorpus::new(corpus);
    MatchIndex::from_matches(
        threshold,
        training.iter().map(|s| (s, prepared.match_sentence(s, threshold))),
    )
}
