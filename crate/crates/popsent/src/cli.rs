//! Command-line surface. Commands pass work along through files in the
//! `--out` directory, so an expensive stage never has to be repeated.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use popsent_core::backend::{holdout_eval, BackendKind, ConfiguredBackend, SentenceMetrics};
use popsent_core::corpus::{validate_corpus, BinaryLabel, Corpus, SpeechType, TrainingSentence};
use popsent_core::derive_seed;
use popsent_core::experiments::{
    check_counts, cross_context, evaluate_level, grid_row, sparsity_row, variant_grid, CrossContextInput,
    CrossContextReport, GridRow, LevelEvaluation, SparsityRow, StumpSettings,
};
use popsent_core::leakage::{MatchCorpus, MatchIndex};
use popsent_core::metrics::{confusion, r_squared, MetricsRow};
use popsent_core::pipeline::{assemble, plan_units, provenance_for, score_unit, train_excluding, unit_seed, PipelineResult, UnitKind, UnitOutcome};
use popsent_core::synth::generate_corpus;
use popsent_core::{BackendConfig, ThresholdMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, Overrides};
use crate::io;
use crate::models::{self, Manifest, ManifestEntry};
use crate::plots;
use crate::report;
use crate::vectors::VectorCache;

#[derive(Debug, Parser)]
#[command(name = "popsent", version, about = "Leakage-safe populist rhetoric detection in political speeches")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file with backend, threshold, synth and experiment settings.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
    /// Worker threads for per-unit training and experiment jobs.
    #[arg(long, global = true, value_name = "INT")]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_parser = ["embedding_finetune", "lexical_baseline"])]
    pub backend: Option<String>,
    #[arg(long, global = true, value_parser = ["bootstrap", "deterministic", "cv"])]
    pub threshold_mode: Option<String>,
    #[arg(long, global = true, value_name = "FLOAT")]
    pub match_threshold: Option<f64>,
    /// Artifact directory read and written by every command.
    #[arg(long, global = true, value_name = "DIR", default_value = "popsent-out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a corpus (and optionally training sentences).
    Ingest(IngestArgs),
    /// Map training sentences to their source speeches.
    Match(InputArgs),
    /// Fit one model per unit with its own sentences excluded, then score.
    Train(TrainArgs),
    /// Re-score speeches with saved unit models.
    Classify(InputArgs),
    /// Fit cutoffs and compute speech and speaker metrics.
    Evaluate(EvaluateArgs),
    /// Boundary-condition experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Generate a synthetic corpus with planted ground truth.
    Synth,
    /// Render tables and figures from the artifacts in --out.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus as JSONL, or CSV with the same columns.
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Corpus name; defaults to the file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Training sentences CSV (text,category[,source_speech_id]).
    #[arg(long, value_name = "PATH")]
    pub training: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Defaults to corpus.jsonl in --out.
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
    /// Defaults to training.csv in --out.
    #[arg(long, value_name = "PATH")]
    pub training: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// term or speaker; overrides the config file.
    #[arg(long, value_name = "KIND")]
    pub unit_kind: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Defaults to predictions.json in --out.
    #[arg(long, value_name = "PATH")]
    pub predictions: Option<PathBuf>,
    /// Also run the sentence-level holdout evaluation on training.csv.
    #[arg(long)]
    pub holdout: bool,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Metrics as the number of training sentences per class shrinks.
    Sparsity(SparsityArgs),
    /// Train on one context and test on another corpus.
    CrossContext(CrossContextArgs),
    /// Repeated holdout runs over all combinations of the variant flags.
    Grid(GridArgs),
}

#[derive(Debug, Args)]
pub struct SparsityArgs {
    #[arg(long, value_name = "PATH")]
    pub training: Option<PathBuf>,
    /// Comma-separated sentences per class; defaults to the config list.
    #[arg(long, value_delimiter = ',', value_name = "N,N,...")]
    pub counts: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct CrossContextArgs {
    #[arg(long, value_name = "PATH")]
    pub training: Option<PathBuf>,
    #[arg(long, default_value = "training")]
    pub train_name: String,
    #[arg(long, value_name = "PATH")]
    pub test_corpus: PathBuf,
    #[arg(long)]
    pub test_name: Option<String>,
    /// Restrict the test corpus to one speech type (e.g. campaign).
    #[arg(long)]
    pub speech_type: Option<String>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, value_name = "PATH")]
    pub training: Option<PathBuf>,
    #[arg(long, value_name = "INT")]
    pub repetitions: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A results table in the published layout to render as well.
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
}

impl GlobalArgs {
    fn overrides(&self) -> Result<Overrides> {
        Ok(Overrides {
            seed: self.seed,
            workers: self.workers,
            backend: self.backend.as_deref().map(str::parse::<BackendKind>).transpose()?,
            threshold_mode: self.threshold_mode.as_deref().map(str::parse::<ThresholdMode>).transpose()?,
            match_threshold: self.match_threshold,
        })
    }
}

struct Ctx {
    config: Config,
    out: PathBuf,
    pool: rayon::ThreadPool,
}

impl Ctx {
    fn path(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out.join(default))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = Config::resolve(cli.global.config.as_deref(), &cli.global.overrides()?)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers).build()?;
    let ctx = Ctx {
        config,
        out: cli.global.out.clone(),
        pool,
    };
    match &cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Match(a) => match_cmd(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Classify(a) => classify(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Experiment(ExperimentCommand::Sparsity(a)) => sparsity(&ctx, a),
        Command::Experiment(ExperimentCommand::CrossContext(a)) => cross(&ctx, a),
        Command::Experiment(ExperimentCommand::Grid(a)) => grid(&ctx, a),
        Command::Synth => synth(&ctx),
        Command::Report(a) => report_cmd(&ctx, a),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into())
}

fn load_validated(path: &Path, name: Option<&str>) -> Result<Corpus> {
    let name = name.map(str::to_string).unwrap_or_else(|| stem(path));
    let (corpus, load) = io::load_corpus(path, &name)?;
    let (corpus, mut report) = validate_corpus(corpus).with_context(|| format!("validating {}", path.display()))?;
    report.rejected_records = load.rejected_records;
    if !report.rejected_records.is_empty() || !report.dropped_units.is_empty() {
        eprintln!(
            "{}: {} records rejected, {} units dropped",
            path.display(),
            report.rejected_records.len(),
            report.dropped_units.len()
        );
    }
    Ok(corpus)
}

fn ingest(ctx: &Ctx, a: &IngestArgs) -> Result<()> {
    let name = a.name.clone().unwrap_or_else(|| stem(&a.corpus));
    let (corpus, load) = io::load_corpus(&a.corpus, &name)?;
    let (corpus, mut report) = validate_corpus(corpus)?;
    report.rejected_records = load.rejected_records;
    io::write_corpus_jsonl(&ctx.out.join("corpus.jsonl"), &corpus)?;
    io::write_json(&ctx.out.join("validation_report.json"), &report)?;
    println!(
        "{}: {} speeches in {} units ({} records rejected, {} units dropped)",
        corpus.name(),
        corpus.len(),
        corpus.unit_count(),
        report.rejected_records.len(),
        report.dropped_units.len()
    );
    if let Some(t) = &a.training {
        let training = io::load_training(t)?;
        io::write_training(&ctx.out.join("training.csv"), &training)?;
        println!("{} training sentences", training.len());
    }
    Ok(())
}

fn load_inputs(ctx: &Ctx, a: &InputArgs) -> Result<(Corpus, Vec<TrainingSentence>)> {
    let corpus_path = ctx.path(&a.corpus, "corpus.jsonl");
    let corpus = load_validated(&corpus_path, None)?;
    let training = io::load_training(&ctx.path(&a.training, "training.csv"))?;
    Ok((corpus, training))
}

fn build_index(ctx: &Ctx, corpus: &Corpus, training: &[TrainingSentence]) -> Result<MatchIndex> {
    let threshold = ctx.config.match_threshold;
    let prepared = MatchCorpus::new(corpus);
    let matches: Vec<_> = ctx.pool.install(|| {
        training
            .par_iter()
            .map(|s| (s, prepared.match_sentence(s, threshold)))
            .collect()
    });
    Ok(MatchIndex::from_matches(threshold, matches)?)
}

#[derive(Serialize)]
struct RateRow {
    category: String,
    total: usize,
    matched: usize,
    rate: f64,
}

fn write_index(ctx: &Ctx, index: &MatchIndex) -> Result<()> {
    io::write_match_index(&ctx.out.join("match_index.csv"), index)?;
    let rates: Vec<RateRow> = index
        .rates()
        .into_iter()
        .map(|(c, r)| RateRow {
            category: c.as_str().into(),
            total: r.total,
            matched: r.matched,
            rate: r.rate(),
        })
        .collect();
    for r in &rates {
        println!("{:<10} {:>5}/{:<5} matched ({:.1}%)", r.category, r.matched, r.total, 100.0 * r.rate);
    }
    io::write_json(&ctx.out.join("match_rates.json"), &rates)
}

fn match_cmd(ctx: &Ctx, a: &InputArgs) -> Result<()> {
    let (corpus, training) = load_inputs(ctx, a)?;
    let index = build_index(ctx, &corpus, &training)?;
    write_index(ctx, &index)
}

fn backend(ctx: &Ctx, cache: &VectorCache) -> Result<ConfiguredBackend> {
    let b = ConfiguredBackend::new(ctx.config.backend.clone())?;
    Ok(b.with_encoders(cache.encoders(ctx.config.backend.embedding.dim)))
}

fn vector_cache(config: &BackendConfig) -> Result<VectorCache> {
    if config.backend_kind == BackendKind::EmbeddingFinetune {
        VectorCache::from_env()
    } else {
        Ok(VectorCache::default())
    }
}

fn train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let kind: UnitKind = match &a.unit_kind {
        Some(k) => k.parse()?,
        None => ctx.config.unit_kind,
    };
    let (corpus, training) = load_inputs(ctx, &a.input)?;
    let index_path = ctx.out.join("match_index.csv");
    let index = if index_path.exists() {
        let index = io::load_match_index(&index_path)?;
        index.check_against(&corpus).context("match index does not fit the corpus; rerun `match`")?;
        index
    } else {
        let index = build_index(ctx, &corpus, &training)?;
        write_index(ctx, &index)?;
        index
    };
    let cache = vector_cache(&ctx.config.backend)?;
    let backend = backend(ctx, &cache)?;
    let units = plan_units(&corpus, kind, &index);
    let seed = ctx.config.seed;
    let fitted: Vec<_> = ctx.pool.install(|| {
        units
            .par_iter()
            .map(|u| {
                let (model, info) = train_excluding(&backend, u, &training, unit_seed(seed, u))?;
                let predictions = score_unit(&model, u, &corpus)?;
                Ok::<_, popsent_core::pipeline::PipelineError>((u.clone(), model, info, predictions))
            })
            .collect::<Vec<_>>()
    });
    let fitted = fitted.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut entries = Vec::new();
    let mut outcomes = Vec::new();
    for (i, (unit, model, info, predictions)) in fitted.into_iter().enumerate() {
        let dir = models::unit_dir_name(i);
        models::save_model(&ctx.out, &dir, &model)?;
        entries.push(ManifestEntry {
            unit: unit.clone(),
            training: info.clone(),
            dir,
        });
        outcomes.push(UnitOutcome {
            unit,
            training: info,
            predictions,
        });
    }
    let provenance = provenance_for(&backend, &corpus, &index, kind, seed);
    models::save_manifest(
        &ctx.out,
        &Manifest {
            config: ctx.config.backend.clone(),
            provenance: provenance.clone(),
            units: entries,
        },
    )?;
    let result = assemble(outcomes, provenance);
    io::write_json(&ctx.out.join("predictions.json"), &result)?;
    println!(
        "trained {} {} models; {} speeches, {} speakers, {:.1}% of sentences populist",
        result.units.len(),
        kind,
        result.speeches.len(),
        result.speakers.len(),
        result.populist_sentence_percentage()
    );
    Ok(())
}

fn classify(ctx: &Ctx, a: &InputArgs) -> Result<()> {
    let corpus = load_validated(&ctx.path(&a.corpus, "corpus.jsonl"), None)?;
    let manifest = models::load_manifest(&ctx.out)?;
    let cache = vector_cache(&manifest.config)?;
    let outcomes: Vec<_> = ctx.pool.install(|| {
        manifest
            .units
            .par_iter()
            .map(|e| {
                let model = models::load_model(&ctx.out, e, &cache)?;
                let predictions = score_unit(&model, &e.unit, &corpus)?;
                Ok::<_, anyhow::Error>(UnitOutcome {
                    unit: e.unit.clone(),
                    training: e.training.clone(),
                    predictions,
                })
            })
            .collect::<Vec<_>>()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let result = assemble(outcomes, manifest.provenance.clone());
    io::write_json(&ctx.out.join("predictions.json"), &result)?;
    println!("scored {} speeches with {} unit models", result.speeches.len(), manifest.units.len());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LevelReport {
    pub evaluation: LevelEvaluation,
    pub metrics: MetricsRow,
    /// Squared correlation of predicted fraction and human grade.
    pub r_squared: Option<f64>,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Evaluation {
    pub threshold: StumpSettings,
    pub speech: LevelReport,
    pub speaker: Option<LevelReport>,
    pub sentence: Option<SentenceMetrics>,
    pub grades_tenths: Vec<u8>,
}

fn level(fractions: Vec<f64>, grades: Vec<f64>, truths: Vec<BinaryLabel>, s: &StumpSettings, seed: u64) -> Result<LevelReport> {
    let evaluation = evaluate_level(&fractions, &truths, s, seed)?;
    Ok(LevelReport {
        metrics: evaluation.row(),
        evaluation,
        r_squared: r_squared(&fractions, &grades).ok(),
        points: fractions.into_iter().zip(grades).collect(),
    })
}

fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let path = ctx.path(&a.predictions, "predictions.json");
    let result: PipelineResult = io::read_json(&path, "predictions")?;
    if result.speeches.is_empty() {
        bail!("{} holds no speech predictions", path.display());
    }
    let s = &ctx.config.threshold;
    let seed = ctx.config.seed;
    let speech = level(
        result.speeches.iter().map(|p| p.populist_fraction).collect(),
        result.speeches.iter().map(|p| p.human_score.value()).collect(),
        result.speeches.iter().map(|p| p.truth()).collect(),
        s,
        derive_seed(seed, b"speech-stump"),
    )?;
    let speaker = if result.speakers.len() >= 2 {
        Some(level(
            result.speakers.iter().map(|p| p.populist_fraction).collect(),
            result.speakers.iter().map(|p| p.mean_human_score).collect(),
            result.speakers.iter().map(|p| p.truth()).collect(),
            s,
            derive_seed(seed, b"speaker-stump"),
        )?)
    } else {
        None
    };
    let sentence = if a.holdout {
        let training = io::load_training(&ctx.out.join("training.csv"))?;
        let cache = vector_cache(&ctx.config.backend)?;
        let m = holdout_eval(&backend(ctx, &cache)?, &training, ctx.config.backend.train_fraction, seed)?;
        io::write_json(&ctx.out.join("sentence_metrics.json"), &m)?;
        Some(m)
    } else {
        None
    };
    io::write_json(&ctx.out.join("metrics_speech.json"), &speech.metrics)?;
    io::write_json(&ctx.out.join("stump_speech.json"), &speech.evaluation.stump)?;
    if let Some(sp) = &speaker {
        io::write_json(&ctx.out.join("metrics_speaker.json"), &sp.metrics)?;
        io::write_json(&ctx.out.join("stump_speaker.json"), &sp.evaluation.stump)?;
    }
    let eval = Evaluation {
        threshold: *s,
        speech,
        speaker,
        sentence,
        grades_tenths: result.speeches.iter().map(|p| p.human_score.tenths()).collect(),
    };
    io::write_json(&ctx.out.join("evaluation.json"), &eval)?;
    let m = &eval.speech.metrics;
    println!(
        "speeches: n={} accuracy={:.2} f1={:.2} mcc={:.2} cutoff={:.3}",
        m.n, m.accuracy, m.f1, m.mcc, eval.speech.evaluation.stump.threshold
    );
    if let Some(sp) = &eval.speaker {
        let m = &sp.metrics;
        println!("speakers: n={} accuracy={:.2} f1={:.2} mcc={:.2}", m.n, m.accuracy, m.f1, m.mcc);
    }
    Ok(())
}

fn sparsity(ctx: &Ctx, a: &SparsityArgs) -> Result<()> {
    let training = io::load_training(&ctx.path(&a.training, "training.csv"))?;
    let counts = a.counts.clone().unwrap_or_else(|| ctx.config.experiments.counts.clone());
    check_counts(&training, &counts)?;
    let cache = vector_cache(&ctx.config.backend)?;
    let backend = backend(ctx, &cache)?;
    let fraction = ctx.config.backend.train_fraction;
    let seed = ctx.config.seed;
    let rows: Vec<_> = ctx.pool.install(|| {
        counts
            .par_iter()
            .map(|&c| sparsity_row(&backend, &training, c, fraction, seed))
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<SparsityRow>, _>>()?;
    io::write_json(&ctx.out.join("sparsity.json"), &rows)?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let m = &r.metrics;
            vec![
                r.sentences_per_class.to_string(),
                m.accuracy.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
                m.mcc.to_string(),
            ]
        })
        .collect();
    io::write_table(&ctx.out.join("sparsity.csv"), &report::SPARSITY_COLUMNS, &cells)?;
    print!("{}", report::sparsity_table(&rows));
    Ok(())
}

const CROSS_COLUMNS: [&str; 10] = [
    "Data",
    "N",
    "Populist sentences (%)",
    "Accuracy",
    "Precision",
    "Recall",
    "F1",
    "F2",
    "AuROC",
    "MCC",
];

fn cross_row(r: &CrossContextReport) -> Vec<String> {
    let label = match r.speech_type {
        Some(t) => format!("{} training; {} {} testing", r.train_corpus, r.test_corpus, t),
        None => format!("{} training; {} testing", r.train_corpus, r.test_corpus),
    };
    let mut cells = report::metrics_cells(&label, &r.speech_metrics);
    cells.insert(2, format!("{:.1}", r.populist_percentage));
    cells
}

fn cross(ctx: &Ctx, a: &CrossContextArgs) -> Result<()> {
    let training = io::load_training(&ctx.path(&a.training, "training.csv"))?;
    let test = load_validated(&a.test_corpus, a.test_name.as_deref())?;
    let speech_type = a.speech_type.as_deref().map(str::parse::<SpeechType>).transpose()?;
    let cache = vector_cache(&ctx.config.backend)?;
    let backend = backend(ctx, &cache)?;
    let r = cross_context(
        &backend,
        &CrossContextInput {
            train_name: &a.train_name,
            training: &training,
            test: &test,
            speech_type,
            match_threshold: ctx.config.match_threshold,
            stump: ctx.config.threshold,
            seed: ctx.config.seed,
        },
    )?;
    io::write_json(&ctx.out.join("cross_context.json"), &r)?;
    let row = cross_row(&r);
    io::write_table(&ctx.out.join("cross_context.csv"), &CROSS_COLUMNS, std::slice::from_ref(&row))?;
    print!("{}", report::markdown_table(&CROSS_COLUMNS, &[row]));
    if r.excluded_matches > 0 {
        eprintln!("dropped {} training sentences that match test speeches", r.excluded_matches);
    }
    Ok(())
}

fn grid(ctx: &Ctx, a: &GridArgs) -> Result<()> {
    let training = io::load_training(&ctx.path(&a.training, "training.csv"))?;
    let repetitions = a.repetitions.unwrap_or(ctx.config.experiments.repetitions);
    let base = &ctx.config.backend;
    let variants = if base.backend_kind == BackendKind::EmbeddingFinetune {
        variant_grid(base)
    } else {
        vec![base.clone()]
    };
    let cache = vector_cache(base)?;
    let encoders = cache.encoders(base.embedding.dim);
    let seed = ctx.config.seed;
    if repetitions == 0 {
        bail!("repetitions must be at least 1");
    }
    let rows: Vec<_> = ctx.pool.install(|| {
        variants
            .par_iter()
            .map(|c| grid_row(c, &encoders, &training, repetitions, seed))
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<GridRow>, _>>()?;
    io::write_json(&ctx.out.join("grid.json"), &rows)?;
    let mut header: Vec<&str> = report::GRID_COLUMNS.to_vec();
    let numeric = [
        "accuracy_mean",
        "accuracy_std",
        "precision_mean",
        "precision_std",
        "recall_mean",
        "recall_std",
        "f1_mean",
        "f1_std",
        "mcc_mean",
        "mcc_std",
    ];
    header.extend(numeric);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = report::grid_cells(r);
            for (m, s) in [
                (r.mean.accuracy, r.std.accuracy),
                (r.mean.precision, r.std.precision),
                (r.mean.recall, r.std.recall),
                (r.mean.f1, r.std.f1),
                (r.mean.mcc, r.std.mcc),
            ] {
                c.push(m.to_string());
                c.push(s.to_string());
            }
            c
        })
        .collect();
    io::write_table(&ctx.out.join("grid.csv"), &header, &cells)?;
    print!("{}", report::grid_table(&rows));
    Ok(())
}

fn synth(ctx: &Ctx) -> Result<()> {
    let s = generate_corpus(&ctx.config.synth)?;
    io::write_corpus_jsonl(&ctx.out.join("corpus.jsonl"), &s.corpus)?;
    io::write_training(&ctx.out.join("training.csv"), &s.training)?;
    io::write_ground_truth(&ctx.out.join("ground_truth.csv"), &s.truth)?;
    io::write_speech_truth(&ctx.out.join("ground_truth_speeches.csv"), &s.truth)?;
    println!(
        "{} speeches by {} speakers, {} training sentences",
        s.corpus.len(),
        s.corpus.speaker_count(),
        s.training.len()
    );
    Ok(())
}

fn report_cmd(ctx: &Ctx, a: &ReportArgs) -> Result<()> {
    let out = &ctx.out;
    let figures = out.join("figures");
    let mut md = String::new();

    if let Some(t) = &a.table {
        let rows = report::load_published_table(t)?;
        md.push_str("## Results table\n\n");
        md.push_str(&report::published_table(&rows));
        md.push('\n');
    }

    let eval_path = out.join("evaluation.json");
    if eval_path.exists() {
        let eval: Evaluation = io::read_json(&eval_path, "evaluation")?;
        md.push_str("## Speech and speaker results\n\n");
        let mut rows = vec![report::metrics_cells("speeches", &eval.speech.metrics)];
        if let Some(sp) = &eval.speaker {
            rows.push(report::metrics_cells("speakers", &sp.metrics));
        }
        md.push_str(&report::markdown_table(&report::METRIC_COLUMNS, &rows));
        md.push('\n');
        if let Some(m) = &eval.sentence {
            md.push_str("## Sentence-level holdout\n\n");
            let mut c = vec!["sentences".to_string()];
            c.extend(report::sentence_cells(m));
            md.push_str(&report::markdown_table(&["Model", "Accuracy", "Precision", "Recall", "F1", "MCC"], &[c]));
            md.push('\n');
        }
        for (name, lvl) in [("speech", Some(&eval.speech)), ("speaker", eval.speaker.as_ref())] {
            let Some(lvl) = lvl else { continue };
            let truths: Vec<BinaryLabel> = lvl.points.iter().map(|p| BinaryLabel::from_bool(p.1 >= 0.5)).collect();
            let cm = confusion(&lvl.evaluation.predictions, &truths)?;
            plots::confusion_heatmap(&figures.join(format!("confusion_{name}.svg")), &format!("{name}es"), &cm)?;
            plots::fraction_scatter(&figures.join(format!("scatter_{name}.svg")), &format!("{name}es"), &lvl.points, lvl.r_squared)?;
            let r2 = lvl.r_squared.map(|r| format!("{r:.2}")).unwrap_or_else(|| "n/a".into());
            md.push_str(&format!(
                "- {name} cutoff {:.3} ({} of {} runs), r² {r2}\n",
                lvl.evaluation.stump.threshold, lvl.evaluation.stump.modal_count, lvl.evaluation.stump.runs
            ));
        }
        plots::grade_histogram(&figures.join("grade_histogram.svg"), &eval.grades_tenths)?;
        md.push('\n');
    }

    let sparsity_path = out.join("sparsity.json");
    if sparsity_path.exists() {
        let rows: Vec<SparsityRow> = io::read_json(&sparsity_path, "sparsity results")?;
        md.push_str("## Sentences per class\n\n");
        md.push_str(&report::sparsity_table(&rows));
        md.push('\n');
        plots::sparsity_curves(&figures.join("sparsity.svg"), &rows)?;
    }

    let cross_path = out.join("cross_context.json");
    if cross_path.exists() {
        let r: CrossContextReport = io::read_json(&cross_path, "cross-context results")?;
        md.push_str("## Cross-context\n\n");
        md.push_str(&report::markdown_table(&CROSS_COLUMNS, &[cross_row(&r)]));
        md.push('\n');
    }

    let grid_path = out.join("grid.json");
    if grid_path.exists() {
        let rows: Vec<GridRow> = io::read_json(&grid_path, "grid results")?;
        md.push_str("## Hyperparameter grid\n\n");
        md.push_str(&report::grid_table(&rows));
        md.push('\n');
    }

    if md.is_empty() {
        bail!("nothing to report in {}: run evaluate or an experiment first, or pass --table", out.display());
    }
    io::write_text(&out.join("report.md"), &md)?;
    print!("{md}");
    Ok(())
}
