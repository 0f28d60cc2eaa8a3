//! Speech corpora, annotated training sentences, grade handling and
//! sentence splitting.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Minimum number of speeches a unit needs to survive validation.
pub const MIN_SPEECHES_PER_UNIT: usize = 3;

/// Grade cutoff in tenths: a grade of 0.5 or more is populist.
pub const POPULIST_GRADE_CUTOFF_TENTHS: u8 = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("score out of range: {0} (expected 0.0..=2.0)")]
    ScoreOutOfRange(f64),
    #[error("score {0} has more than one decimal place")]
    ScorePrecision(f64),
    #[error("duplicate speech id {0:?}")]
    DuplicateId(String),
    #[error("empty corpus after validation")]
    EmptyCorpus,
    #[error("speech {0:?} has empty text")]
    EmptyText(String),
    #[error("training sentence has empty text")]
    EmptySentence,
    #[error("unknown speech type {0:?}")]
    UnknownSpeechType(String),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
}

/// Human holistic grade on the 0.0..=2.0 scale, stored in tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Grade(u8);

impl Grade {
    pub const MAX_TENTHS: u8 = 20;

    pub fn from_tenths(tenths: u8) -> Result<Self, CorpusError> {
        if tenths > Self::MAX_TENTHS {
            return Err(CorpusError::ScoreOutOfRange(f64::from(tenths) / 10.0));
        }
        Ok(Grade(tenths))
    }

    /// Parses a decimal grade, rejecting values outside `[0, 2]` or with
    /// more than one decimal place.
    pub fn from_f64(score: f64) -> Result<Self, CorpusError> {
        if !score.is_finite() || !(0.0..=2.0).contains(&score) {
            return Err(CorpusError::ScoreOutOfRange(score));
        }
        let scaled = score * 10.0;
        let rounded = libm::round(scaled);
        if libm::fabs(scaled - rounded) > 1e-6 {
            return Err(CorpusError::ScorePrecision(score));
        }
        Ok(Grade(rounded as u8))
    }

    pub fn tenths(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    pub fn binarize(self) -> BinaryLabel {
        if self.0 >= POPULIST_GRADE_CUTOFF_TENTHS {
            BinaryLabel::Populist
        } else {
            BinaryLabel::NonPopulist
        }
    }
}

impl Serialize for Grade {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Grade {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Grade::from_f64(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

/// Binarizes a decimal grade: populist iff `score >= 0.5`.
pub fn binarize_score(score: f64) -> Result<BinaryLabel, CorpusError> {
    if !score.is_finite() || !(0.0..=2.0).contains(&score) {
        return Err(CorpusError::ScoreOutOfRange(score));
    }
    Ok(if score >= 0.5 {
        BinaryLabel::Populist
    } else {
        BinaryLabel::NonPopulist
    })
}

/// Speech-, speaker- or prediction-level binary label. Serialized as 1/0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryLabel {
    NonPopulist,
    Populist,
}

impl BinaryLabel {
    pub fn is_populist(self) -> bool {
        self == BinaryLabel::Populist
    }

    pub fn from_bool(populist: bool) -> Self {
        if populist {
            BinaryLabel::Populist
        } else {
            BinaryLabel::NonPopulist
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

impl Serialize for BinaryLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for BinaryLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(BinaryLabel::NonPopulist),
            1 => Ok(BinaryLabel::Populist),
            other => Err(serde::de::Error::custom(alloc::format!(
                "binary label must be 0 or 1, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeechType {
    Campaign,
    StateOfState,
    Ceremonial,
    Famous,
}

impl SpeechType {
    pub fn as_str(self) -> &'static str {
        match self {
            SpeechType::Campaign => "campaign",
            SpeechType::StateOfState => "state_of_state",
            SpeechType::Ceremonial => "ceremonial",
            SpeechType::Famous => "famous",
        }
    }
}

impl fmt::Display for SpeechType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpeechType {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "campaign" => Ok(SpeechType::Campaign),
            "state_of_state" => Ok(SpeechType::StateOfState),
            "ceremonial" => Ok(SpeechType::Ceremonial),
            "famous" => Ok(SpeechType::Famous),
            other => Err(CorpusError::UnknownSpeechType(other.to_string())),
        }
    }
}

/// Sentence category used for training and per-sentence prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Populist,
    Pluralist,
    Neutral,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Populist, Category::Pluralist, Category::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Populist => "populist",
            Category::Pluralist => "pluralist",
            Category::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "populist" => Ok(Category::Populist),
            "pluralist" => Ok(Category::Pluralist),
            "neutral" => Ok(Category::Neutral),
            _ => Err(CorpusError::UnknownCategory(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Speech {
    pub id: String,
    pub speaker_id: String,
    pub unit_id: String,
    #[serde(default)]
    pub state: Option<String>,
    pub speech_type: SpeechType,
    #[serde(default)]
    pub period: Option<String>,
    pub text: String,
    pub human_score: Grade,
}

impl Speech {
    pub fn label(&self) -> BinaryLabel {
        self.human_score.binarize()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrainingSentence {
    pub text: String,
    pub category: Category,
    #[serde(default)]
    pub source_speech_id: Option<String>,
}

impl TrainingSentence {
    pub fn new(text: impl Into<String>, category: Category) -> Self {
        TrainingSentence {
            text: text.into(),
            category,
            source_speech_id: None,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.text.trim().is_empty() {
            return Err(CorpusError::EmptySentence);
        }
        Ok(())
    }

    /// Identity of a training sentence independent of its position in a
    /// list: category plus exact text.
    pub fn key(&self) -> SentenceKey {
        let mut fp = crate::Fingerprint::new();
        fp.write_field(self.category.as_str().as_bytes());
        fp.write_field(self.text.as_bytes());
        SentenceKey(fp.finish())
    }
}

/// Position-independent identity of a training sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SentenceKey(pub u64);

impl fmt::Display for SentenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// A named collection of speeches grouped into units (governor terms or
/// candidates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorpusRepr", into = "CorpusRepr")]
pub struct Corpus {
    name: String,
    speeches: Vec<Speech>,
    units: BTreeMap<String, Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct CorpusRepr {
    name: String,
    speeches: Vec<Speech>,
}

impl TryFrom<CorpusRepr> for Corpus {
    type Error = CorpusError;

    fn try_from(r: CorpusRepr) -> Result<Self, Self::Error> {
        Corpus::new(r.name, r.speeches)
    }
}

impl From<Corpus> for CorpusRepr {
    fn from(c: Corpus) -> Self {
        CorpusRepr {
            name: c.name,
            speeches: c.speeches,
        }
    }
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids and empty texts.
    pub fn new(name: impl Into<String>, speeches: Vec<Speech>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for s in &speeches {
            if !seen.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateId(s.id.clone()));
            }
            if s.text.trim().is_empty() {
                return Err(CorpusError::EmptyText(s.id.clone()));
            }
        }
        let mut units: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, s) in speeches.iter().enumerate() {
            units.entry(s.unit_id.clone()).or_default().push(i);
        }
        Ok(Corpus {
            name: name.into(),
            speeches,
            units,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn speeches(&self) -> &[Speech] {
        &self.speeches
    }

    pub fn len(&self) -> usize {
        self.speeches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeches.is_empty()
    }

    pub fn speech(&self, id: &str) -> Option<&Speech> {
        self.speeches.iter().find(|s| s.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.speech(id).is_some()
    }

    /// Unit id -> speeches, in unit id order.
    pub fn units(&self) -> impl Iterator<Item = (&str, Vec<&Speech>)> + '_ {
        self.units.iter().map(move |(u, idx)| {
            (
                u.as_str(),
                idx.iter().map(|&i| &self.speeches[i]).collect::<Vec<_>>(),
            )
        })
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn speaker_count(&self) -> usize {
        self.speeches
            .iter()
            .map(|s| s.speaker_id.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn filter_speech_type(&self, speech_type: SpeechType) -> Corpus {
        let kept = self
            .speeches
            .iter()
            .filter(|s| s.speech_type == speech_type)
            .cloned()
            .collect();
        Corpus::new(self.name.clone(), kept).expect("subset of a valid corpus")
    }
}

/// A record as read from a corpus file, before grade validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechRecord {
    pub id: String,
    pub speaker_id: String,
    pub unit_id: String,
    #[serde(default)]
    pub state: Option<String>,
    pub speech_type: SpeechType,
    #[serde(default)]
    pub period: Option<String>,
    pub text: String,
    pub human_score: f64,
}

impl SpeechRecord {
    pub fn into_speech(self) -> Result<Speech, CorpusError> {
        let human_score = Grade::from_f64(self.human_score)?;
        if self.text.trim().is_empty() {
            return Err(CorpusError::EmptyText(self.id));
        }
        Ok(Speech {
            id: self.id,
            speaker_id: self.speaker_id,
            unit_id: self.unit_id,
            state: self.state,
            speech_type: self.speech_type,
            period: self.period,
            text: self.text,
            human_score,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRecord {
    /// 1-based record number in the source file.
    pub record: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub records_read: usize,
    pub records_loaded: usize,
    pub rejected_records: Vec<RejectedRecord>,
}

/// Assembles a corpus from parsed records. Record-level failures (parse
/// errors, bad grades, empty text) are collected into the report; a
/// duplicate id is fatal.
pub fn assemble_corpus<I>(name: &str, records: I) -> Result<(Corpus, LoadReport), CorpusError>
where
    I: IntoIterator<Item = Result<SpeechRecord, String>>,
{
    let mut report = LoadReport::default();
    let mut speeches = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, rec) in records.into_iter().enumerate() {
        report.records_read += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(reason) => {
                report.rejected_records.push(RejectedRecord {
                    record: i + 1,
                    id: None,
                    reason,
                });
                continue;
            }
        };
        if !seen.insert(rec.id.clone()) {
            return Err(CorpusError::DuplicateId(rec.id));
        }
        let id = rec.id.clone();
        match rec.into_speech() {
            Ok(s) => speeches.push(s),
            Err(e) => report.rejected_records.push(RejectedRecord {
                record: i + 1,
                id: Some(id),
                reason: e.to_string(),
            }),
        }
    }
    report.records_loaded = speeches.len();
    Ok((Corpus::new(name, speeches)?, report))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedUnit {
    pub unit_id: String,
    pub speeches: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub dropped_units: Vec<DroppedUnit>,
    pub dropped_speeches: usize,
    #[serde(default)]
    pub rejected_records: Vec<RejectedRecord>,
}

/// Drops units with fewer than three speeches.
pub fn validate_corpus(corpus: Corpus) -> Result<(Corpus, ValidationReport), CorpusError> {
    let mut report = ValidationReport::default();
    let mut keep = BTreeSet::new();
    for (unit, idx) in &corpus.units {
        if idx.len() >= MIN_SPEECHES_PER_UNIT {
            keep.insert(unit.clone());
        } else {
            report.dropped_units.push(DroppedUnit {
                unit_id: unit.clone(),
                speeches: idx.len(),
            });
            report.dropped_speeches += idx.len();
        }
    }
    if keep.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if report.dropped_units.is_empty() {
        return Ok((corpus, report));
    }
    let Corpus { name, speeches, .. } = corpus;
    let kept = speeches
        .into_iter()
        .filter(|s| keep.contains(&s.unit_id))
        .collect();
    Ok((Corpus::new(name, kept)?, report))
}

/// Sentence terminators.
pub fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits text into sentences at `.`, `!` and `?`.
///
/// Each terminator closes the current sentence and stays attached to it. A
/// trailing unterminated fragment becomes the last sentence. Sentences are
/// trimmed and whitespace-only fragments dropped; nothing else is removed,
/// so the non-whitespace characters of the input are preserved in order.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if is_terminator(c) {
            let end = i + c.len_utf8();
            push_trimmed(&mut out, &text[start..end]);
            start = end;
        }
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn push_trimmed<'a>(out: &mut Vec<&'a str>, frag: &'a str) {
    let t = frag.trim();
    if !t.is_empty() {
        out.push(t);
    }
}

/// Minimum trimmed length (in characters) of a sentence that is handed to
/// a classifier.
pub const MIN_CLASSIFIABLE_CHARS: usize = 2;

/// Sentences of a speech that are fed to a classifier: the output of
/// [`split_sentences`] minus fragments shorter than
/// [`MIN_CLASSIFIABLE_CHARS`] (stray terminators such as the tail of "...").
pub fn classifiable_sentences(text: &str) -> Vec<&str> {
    split_sentences(text)
        .into_iter()
        .filter(|s| s.chars().count() >= MIN_CLASSIFIABLE_CHARS)
        .collect()
}
