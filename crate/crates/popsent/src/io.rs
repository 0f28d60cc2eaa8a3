//! File formats: corpus JSONL/CSV, training CSV, match index CSV, JSON
//! artifacts and the synthetic ground truth.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use popsent_core::corpus::{assemble_corpus, Category, Corpus, LoadReport, SentenceKey, SpeechRecord, TrainingSentence};
use popsent_core::leakage::MatchIndex;
use popsent_core::synth::GroundTruth;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Fails with "<what> not found: <path>" when an input artifact is missing.
pub fn require(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!("{what} not found: {}", path.display());
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    require(path, what)?;
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads a corpus from JSONL (one record per line) or, for `.csv` files,
/// from a CSV with the same column names. Malformed records are reported,
/// not fatal; duplicate ids are fatal.
pub fn load_corpus(path: &Path, name: &str) -> Result<(Corpus, LoadReport)> {
    require(path, "corpus")?;
    let records: Vec<Result<SpeechRecord, String>> = if is_csv(path) {
        let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        rdr.deserialize().map(|r| r.map_err(|e| e.to_string())).collect()
    } else {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut out = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| e.to_string()));
        }
        out
    };
    assemble_corpus(name, records).with_context(|| format!("loading {}", path.display()))
}

fn record(s: &popsent_core::Speech) -> SpeechRecord {
    SpeechRecord {
        id: s.id.clone(),
        speaker_id: s.speaker_id.clone(),
        unit_id: s.unit_id.clone(),
        state: s.state.clone(),
        speech_type: s.speech_type,
        period: s.period.clone(),
        text: s.text.clone(),
        human_score: s.human_score.value(),
    }
}

pub fn write_corpus_jsonl(path: &Path, corpus: &Corpus) -> Result<()> {
    let mut w = create(path)?;
    for s in corpus.speeches() {
        serde_json::to_writer(&mut w, &record(s))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_corpus_csv(path: &Path, corpus: &Corpus) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for s in corpus.speeches() {
        w.serialize(record(s))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainingRow {
    text: String,
    category: String,
    #[serde(default)]
    source_speech_id: Option<String>,
}

/// Reads `text,category[,source_speech_id]`. Any bad row is an error that
/// names its line.
pub fn load_training(path: &Path) -> Result<Vec<TrainingSentence>> {
    require(path, "training sentences")?;
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<TrainingRow>().enumerate() {
        let line = i + 2;
        let row = row.with_context(|| format!("{} line {line}", path.display()))?;
        let category: Category = row
            .category
            .parse()
            .with_context(|| format!("{} line {line}", path.display()))?;
        let mut s = TrainingSentence::new(row.text, category);
        s.source_speech_id = row.source_speech_id.filter(|id| !id.trim().is_empty());
        s.validate().with_context(|| format!("{} line {line}", path.display()))?;
        out.push(s);
    }
    Ok(out)
}

pub fn write_training(path: &Path, training: &[TrainingSentence]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for s in training {
        w.serialize(TrainingRow {
            text: s.text.clone(),
            category: s.category.as_str().to_string(),
            source_speech_id: s.source_speech_id.clone(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct MatchRow {
    text_hash: String,
    category: String,
    speech_id: String,
    similarity: f64,
    occurrences: usize,
}

/// Match index as CSV preceded by a `# threshold=<t>` line.
pub fn write_match_index(path: &Path, index: &MatchIndex) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# threshold={}", index.threshold())?;
    let mut w = csv::Writer::from_writer(out);
    for e in index.entries() {
        w.serialize(MatchRow {
            text_hash: e.key.to_string(),
            category: e.category.as_str().to_string(),
            speech_id: e.speech_id.clone().unwrap_or_default(),
            similarity: e.similarity,
            occurrences: e.occurrences,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_match_index(path: &Path) -> Result<MatchIndex> {
    require(path, "match index")?;
    let text = fs::read_to_string(path)?;
    let first = text.lines().next().unwrap_or_default();
    let threshold: f64 = first
        .strip_prefix("# threshold=")
        .with_context(|| format!("{}: missing threshold line", path.display()))?
        .trim()
        .parse()
        .with_context(|| format!("{}: bad threshold", path.display()))?;
    let mut index = MatchIndex::empty(threshold);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    for row in rdr.deserialize::<MatchRow>() {
        let row = row.with_context(|| format!("parsing {}", path.display()))?;
        let key = SentenceKey(u64::from_str_radix(&row.text_hash, 16).with_context(|| format!("bad text_hash {:?}", row.text_hash))?);
        let category: Category = row.category.parse()?;
        let speech = Some(row.speech_id).filter(|s| !s.is_empty());
        for _ in 0..row.occurrences.max(1) {
            index.insert(key, category, speech.clone(), row.similarity);
        }
    }
    Ok(index)
}

/// Sentence-level ground truth: speech_id, index, category, text.
pub fn write_ground_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["speech_id", "index", "category", "text"])?;
    for s in &truth.sentences {
        w.write_record([s.speech_id.as_str(), &s.index.to_string(), s.category.as_str(), &s.text])?;
    }
    w.flush()?;
    Ok(())
}

/// Speech-level ground truth: planted counts, fraction and grade.
pub fn write_speech_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "speech_id",
        "speaker_id",
        "n_sentences",
        "n_populist",
        "n_pluralist",
        "n_neutral",
        "planted_fraction",
        "human_score",
    ])?;
    for s in &truth.speeches {
        w.write_record([
            s.speech_id.clone(),
            s.speaker_id.clone(),
            s.n_sentences.to_string(),
            s.n_populist.to_string(),
            s.n_pluralist.to_string(),
            s.n_neutral.to_string(),
            s.planted_fraction.to_string(),
            s.human_score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows of string cells with a header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use popsent_core::leakage::build_match_index;
    use popsent_core::synth::{generate_corpus, SynthSpec};

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let s = generate_corpus(&SynthSpec::default()).unwrap();

        let jsonl = dir.path().join("c.jsonl");
        write_corpus_jsonl(&jsonl, &s.corpus).unwrap();
        let (back, report) = load_corpus(&jsonl, "synthetic").unwrap();
        assert_eq!(back, s.corpus);
        assert!(report.rejected_records.is_empty());

        let csv_path = dir.path().join("c.csv");
        write_corpus_csv(&csv_path, &s.corpus).unwrap();
        assert_eq!(load_corpus(&csv_path, "synthetic").unwrap().0, s.corpus);

        let t = dir.path().join("t.csv");
        write_training(&t, &s.training).unwrap();
        assert_eq!(load_training(&t).unwrap(), s.training);

        let index = build_match_index(&s.training, &s.corpus, 0.8).unwrap();
        let m = dir.path().join("m.csv");
        write_match_index(&m, &index).unwrap();
        assert_eq!(load_match_index(&m).unwrap(), index);
    }

    #[test]
    fn bad_records_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        fs::write(
            &p,
            concat!(
                r#"{"id":"a","speaker_id":"x","unit_id":"x","speech_type":"campaign","text":"Hi.","human_score":0.5}"#,
                "\n",
                r#"{"id":"b","speaker_id":"x","unit_id":"x","speech_type":"campaign","text":"Hi.","human_score":2.5}"#,
                "\nnot json\n",
            ),
        )
        .unwrap();
        let (c, r) = load_corpus(&p, "x").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(r.rejected_records.len(), 2);
        assert_eq!(r.rejected_records[0].id.as_deref(), Some("b"));
    }

    #[test]
    fn missing_file_is_named() {
        let err = load_training(Path::new("/nonexistent/training.csv")).unwrap_err();
        assert_eq!(err.to_string(), "training sentences not found: /nonexistent/training.csv");
    }

    #[test]
    fn bad_training_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        fs::write(&p, "text,category\nFine.,neutral\nBad.,angry\n").unwrap();
        let err = format!("{:#}", load_training(&p).unwrap_err());
        assert!(err.contains("line 3"), "{err}");
    }
}
