//! Synthetic corpora with planted ground truth.
//!
//! Each category owns a pool of made-up words. A speech with planted
//! populist fraction `f` and `n` sentences gets `round(f * n)` sentences
//! built from the populist pool; the rest are split between pluralist (one
//! third) and neutral. The human grade is `2f` rounded to one decimal and
//! clipped to [0, 2], so the 0.5 grade cutoff sits at fraction 0.25.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Category, Corpus, CorpusError, Grade, Speech, SpeechType, TrainingSentence};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("speeches_per_speaker must be at least 3, got {0}")]
    TooFewSpeeches(usize),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("fraction {0} outside [0, 1]")]
    Fraction(f64),
    #[error("fraction schedule is empty")]
    EmptySchedule,
    #[error("noise rate {0} outside [0, 1)")]
    Noise(f64),
    #[error("word {0:?} appears in more than one category vocabulary")]
    Overlap(String),
    #[error("{0} vocabulary is empty")]
    EmptyVocabulary(Category),
    #[error("vocabulary word {0:?} is not a single lowercase alphanumeric token")]
    BadWord(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub name: String,
    pub n_speakers: usize,
    pub speeches_per_speaker: usize,
    pub sentences_per_speech: usize,
    /// Populist fraction of speech `j` of speaker `k` is entry
    /// `(k * speeches_per_speaker + j) % len`.
    pub fractions: Vec<f64>,
    /// Word pools in category order: populist, pluralist, neutral.
    pub vocabularies: [Vec<String>; 3],
    /// Chance that a word is drawn from another category's pool.
    pub noise: f64,
    /// Verbatim sentences copied from each speech into the training set.
    pub extracts_per_speech: usize,
    /// Newly generated training sentences per category.
    pub fresh_per_class: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub seed: u64,
}

/// Made-up words: `prefix` followed by a letter pair, e.g. `popab`.
pub fn synthetic_pool(prefix: &str, size: usize) -> Vec<String> {
    let letters = b"abcdefghijklmnopqrstuvwxyz";
    (0..size)
        .map(|i| {
            let a = letters[(i / 26) % 26] as char;
            let b = letters[i % 26] as char;
            format!("{prefix}{a}{b}")
        })
        .collect()
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            name: "synthetic".into(),
            n_speakers: 6,
            speeches_per_speaker: 4,
            sentences_per_speech: 20,
            fractions: Vec::new(),
            vocabularies: [synthetic_pool("pop", 30), synthetic_pool("plu", 30), synthetic_pool("neu", 30)],
            noise: 0.0,
            extracts_per_speech: 2,
            fresh_per_class: 40,
            min_words: 6,
            max_words: 10,
            seed: 0,
        }
        .per_speaker(&[0.0, 0.1, 0.15, 0.35, 0.5, 0.6])
    }
}

impl SynthSpec {
    /// Gives every speech of speaker `k` the fraction `by_speaker[k % len]`.
    pub fn per_speaker(mut self, by_speaker: &[f64]) -> Self {
        self.fractions = (0..self.n_speakers)
            .flat_map(|k| core::iter::repeat_n(by_speaker[k % by_speaker.len()], self.speeches_per_speaker))
            .collect();
        self
    }

    pub fn fraction_for(&self, speaker: usize, speech: usize) -> f64 {
        self.fractions[(speaker * self.speeches_per_speaker + speech) % self.fractions.len()]
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.speeches_per_speaker < 3 {
            return Err(SynthError::TooFewSpeeches(self.speeches_per_speaker));
        }
        for (v, name) in [
            (self.n_speakers, "n_speakers"),
            (self.sentences_per_speech, "sentences_per_speech"),
            (self.min_words, "min_words"),
            (self.fresh_per_class, "fresh_per_class"),
        ] {
            if v == 0 {
                return Err(SynthError::Zero(name));
            }
        }
        if self.max_words < self.min_words {
            return Err(SynthError::Zero("max_words - min_words + 1"));
        }
        if self.fractions.is_empty() {
            return Err(SynthError::EmptySchedule);
        }
        if let Some(&f) = self.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(SynthError::Fraction(f));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(SynthError::Noise(self.noise));
        }
        let mut seen = BTreeSet::new();
        for (c, pool) in Category::ALL.iter().zip(&self.vocabularies) {
            if pool.is_empty() {
                return Err(SynthError::EmptyVocabulary(*c));
            }
            for w in pool {
                if w.is_empty() || !w.chars().all(|ch| ch.is_ascii_lowercase() || ch.is_ascii_digit()) {
                    return Err(SynthError::BadWord(w.clone()));
                }
                if !seen.insert(w.as_str()) && self.noise == 0.0 {
                    return Err(SynthError::Overlap(w.clone()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechTruth {
    pub speech_id: String,
    pub speaker_id: String,
    pub n_sentences: usize,
    pub n_populist: usize,
    pub n_pluralist: usize,
    pub n_neutral: usize,
    /// Realized populist share, `n_populist / n_sentences`.
    pub planted_fraction: f64,
    pub human_score: Grade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceTruth {
    pub speech_id: String,
    pub index: usize,
    pub category: Category,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub speeches: Vec<SpeechTruth>,
    pub sentences: Vec<SentenceTruth>,
}

impl GroundTruth {
    pub fn speech(&self, id: &str) -> Option<&SpeechTruth> {
        self.speeches.iter().find(|s| s.speech_id == id)
    }

    /// Planted category of an exact sentence text, if it was generated.
    pub fn category_of(&self, text: &str) -> Option<Category> {
        self.sentences.iter().find(|s| s.text == text).map(|s| s.category)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub corpus: Corpus,
    pub training: Vec<TrainingSentence>,
    pub truth: GroundTruth,
}

/// `2 * fraction`, rounded to one decimal and clipped to the grade range.
pub fn planted_grade(fraction: f64) -> Grade {
    let tenths = libm::round(20.0 * fraction).clamp(0.0, 20.0) as u8;
    Grade::from_tenths(tenths).expect("clamped to [0, 20]")
}

struct Writer<'a> {
    spec: &'a SynthSpec,
}

impl Writer<'_> {
    fn sentence<R: Rng>(&self, category: Category, r: &mut R, lead: Option<&str>) -> String {
        let n = r.gen_range(self.spec.min_words..=self.spec.max_words);
        let mut words: Vec<&str> = Vec::with_capacity(n);
        for i in 0..n {
            let pool = if self.spec.noise > 0.0 && r.gen::<f64>() < self.spec.noise {
                let other = (category.index() + r.gen_range(1..3)) % 3;
                &self.spec.vocabularies[other]
            } else {
                &self.spec.vocabularies[category.index()]
            };
            let w = match (i, lead) {
                (0, Some(l)) => l,
                _ => pool.choose(r).expect("non-empty pool").as_str(),
            };
            words.push(w);
        }
        let mut s = words.join(" ");
        if let Some(first) = s.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        s.push('.');
        s
    }
}

/// Builds the corpus, the training set and the planted truth. The same spec
/// always yields the same output.
pub fn generate_corpus(spec: &SynthSpec) -> Result<Synthetic, SynthError> {
    spec.validate()?;
    let writer = Writer { spec };
    let n = spec.sentences_per_speech;
    let mut speeches = Vec::new();
    let mut truth = GroundTruth::default();
    let mut training = Vec::new();

    for k in 0..spec.n_speakers {
        let speaker = format!("spk{:02}", k + 1);
        for j in 0..spec.speeches_per_speaker {
            let id = format!("{speaker}-{j}");
            let mut r = rng(derive_seed(spec.seed, id.as_bytes()));
            let n_pop = libm::round(spec.fraction_for(k, j) * n as f64) as usize;
            let n_plu = (n - n_pop) / 3;
            let mut cats: Vec<Category> = core::iter::repeat_n(Category::Populist, n_pop)
                .chain(core::iter::repeat_n(Category::Pluralist, n_plu))
                .chain(core::iter::repeat_n(Category::Neutral, n - n_pop - n_plu))
                .collect();
            cats.shuffle(&mut r);
            let sentences: Vec<String> = cats.iter().map(|&c| writer.sentence(c, &mut r, None)).collect();

            let mut picks: Vec<usize> = (0..n).collect();
            picks.partial_shuffle(&mut r, spec.extracts_per_speech.min(n));
            for &i in picks.iter().take(spec.extracts_per_speech.min(n)) {
                training.push(TrainingSentence::new(sentences[i].clone(), cats[i]));
            }

            let fraction = n_pop as f64 / n as f64;
            let grade = planted_grade(fraction);
            truth.speeches.push(SpeechTruth {
                speech_id: id.clone(),
                speaker_id: speaker.clone(),
                n_sentences: n,
                n_populist: n_pop,
                n_pluralist: n_plu,
                n_neutral: n - n_pop - n_plu,
                planted_fraction: fraction,
                human_score: grade,
            });
            for (index, (text, &category)) in sentences.iter().zip(&cats).enumerate() {
                truth.sentences.push(SentenceTruth {
                    speech_id: id.clone(),
                    index,
                    category,
                    text: text.clone(),
                });
            }
            speeches.push(Speech {
                id,
                speaker_id: speaker.clone(),
                unit_id: speaker.clone(),
                state: None,
                speech_type: if j % 2 == 0 { SpeechType::Campaign } else { SpeechType::StateOfState },
                period: None,
                text: sentences.join(" "),
                human_score: grade,
            });
        }
    }

    // Fresh sentences lead with each pool word in turn, so the training set
    // covers every vocabulary word once there are enough of them.
    for c in Category::ALL {
        let mut r = rng(derive_seed(spec.seed, format!("fresh-{c}").as_bytes()));
        let pool = &spec.vocabularies[c.index()];
        for i in 0..spec.fresh_per_class {
            let lead = pool[i % pool.len()].as_str();
            training.push(TrainingSentence::new(writer.sentence(c, &mut r, Some(lead)), c));
        }
    }

    Ok(Synthetic {
        corpus: Corpus::new(spec.name.to_string(), speeches)?,
        training,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::split_sentences;
    use crate::leakage::build_match_index;

    #[test]
    fn planted_counts() {
        let spec = SynthSpec {
            sentences_per_speech: 10,
            ..SynthSpec::default()
        }
        .per_speaker(&[0.3]);
        let s = generate_corpus(&spec).unwrap();
        for t in &s.truth.speeches {
            assert_eq!(t.n_populist, 3);
            assert_eq!(t.human_score, Grade::from_tenths(6).unwrap());
        }
        for sp in s.corpus.speeches() {
            let pop = split_sentences(&sp.text).iter().filter(|x| x.starts_with("Pop")).count();
            assert_eq!(pop, 3);
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_corpus(&SynthSpec::default()).unwrap();
        let b = generate_corpus(&SynthSpec::default()).unwrap();
        assert_eq!(a, b);
        let c = generate_corpus(&SynthSpec { seed: 1, ..SynthSpec::default() }).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn spec_errors() {
        let few = SynthSpec { speeches_per_speaker: 2, ..SynthSpec::default() };
        assert_eq!(generate_corpus(&few).unwrap_err(), SynthError::TooFewSpeeches(2));
        let mut overlap = SynthSpec::default();
        overlap.vocabularies[1].push("popaa".into());
        assert_eq!(generate_corpus(&overlap).unwrap_err(), SynthError::Overlap("popaa".into()));
        overlap.noise = 0.1;
        assert!(generate_corpus(&overlap).is_ok());
        assert_eq!(
            generate_corpus(&SynthSpec { noise: 1.0, ..SynthSpec::default() }).unwrap_err(),
            SynthError::Noise(1.0)
        );
    }

    #[test]
    fn grade_mapping() {
        assert_eq!(planted_grade(0.25).tenths(), 5);
        assert_eq!(planted_grade(0.2).tenths(), 4);
        assert_eq!(planted_grade(0.9).tenths(), 18);
        assert_eq!(planted_grade(1.0).tenths(), 20);
    }

    #[test]
    fn extracts_match_their_source() {
        let s = generate_corpus(&SynthSpec::default()).unwrap();
        let extracts: Vec<&TrainingSentence> = s.training.iter().filter(|t| s.truth.category_of(&t.text).is_some()).collect();
        assert_eq!(extracts.len(), 24 * 2);
        let index = build_match_index(&s.training, &s.corpus, 1.0).unwrap();
        for e in extracts {
            let src = index.source_of(e.key()).expect("extract matched");
            let owner = s.truth.sentences.iter().find(|x| x.text == e.text).unwrap();
            assert_eq!(src, owner.speech_id);
        }
        assert_eq!(index.matched_count(), 48);
    }
}
