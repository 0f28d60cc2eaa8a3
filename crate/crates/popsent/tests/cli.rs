use std::path::Path;
use std::process::{Command, Output};

use popsent_core::PipelineResult;

fn popsent(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popsent"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("POPSENT_MODEL_CACHE")
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = popsent(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("error line on stderr");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON: {line}: {e}"))
}

const LEX: &[&str] = &["--backend", "lexical_baseline"];

fn with_lex<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = LEX.to_vec();
    v.extend_from_slice(args);
    v
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn synth_train_evaluate_recovers_planted_labels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &with_lex(&["synth"]));
    ok(d, &with_lex(&["train"]));
    let stdout = ok(d, &with_lex(&["evaluate", "--holdout"]));
    assert!(stdout.contains("accuracy=1.00"), "{stdout}");
    for f in [
        "corpus.jsonl",
        "training.csv",
        "ground_truth.csv",
        "match_index.csv",
        "models/manifest.json",
        "models/unit-0000/model.json",
        "predictions.json",
        "metrics_speech.json",
        "metrics_speaker.json",
        "sentence_metrics.json",
        "evaluation.json",
    ] {
        assert!(d.join(f).exists(), "missing {f}");
    }
    let metrics: serde_json::Value = serde_json::from_slice(&read(d, "metrics_speech.json")).unwrap();
    assert_eq!(metrics["n"], 24);
    assert_eq!(metrics["accuracy"], 1.0);

    let result: PipelineResult = serde_json::from_slice(&read(d, "predictions.json")).unwrap();
    assert_eq!(result.units.len(), 6);
    assert!(result.units.iter().all(|u| u.excluded > 0));

    let trained = read(d, "predictions.json");
    ok(d, &with_lex(&["classify"]));
    assert_eq!(trained, read(d, "predictions.json"), "saved models rescore identically");
}

#[test]
fn outputs_are_byte_identical_across_runs_and_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (d, workers) in [(a.path(), "1"), (b.path(), "4")] {
        ok(d, &with_lex(&["--seed", "11", "synth"]));
        ok(d, &with_lex(&["--seed", "11", "--workers", workers, "train"]));
        ok(d, &with_lex(&["--seed", "11", "evaluate"]));
        ok(d, &with_lex(&["--seed", "11", "--workers", workers, "experiment", "sparsity", "--counts", "30,10"]));
    }
    for f in [
        "corpus.jsonl",
        "training.csv",
        "match_index.csv",
        "predictions.json",
        "models/manifest.json",
        "evaluation.json",
        "sparsity.csv",
        "sparsity.json",
    ] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
}

#[test]
fn evaluate_without_predictions_names_the_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let o = popsent(dir.path(), &["evaluate"]);
    assert!(!o.status.success());
    let err = stderr_json(&o);
    assert!(err["error"].as_str().unwrap().starts_with("predictions not found"), "{err}");
}

#[test]
fn help_lists_global_flags_for_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 11] = [
        &[],
        &["ingest"],
        &["match"],
        &["train"],
        &["classify"],
        &["evaluate"],
        &["experiment", "sparsity"],
        &["experiment", "cross-context"],
        &["experiment", "grid"],
        &["synth"],
        &["report"],
    ];
    for cmd in commands {
        let mut args = cmd.to_vec();
        args.push("--help");
        let help = ok(dir.path(), &args);
        for flag in ["--config", "--seed", "--workers", "--backend", "--threshold-mode", "--match-threshold", "--out"] {
            assert!(help.contains(flag), "{cmd:?} help lacks {flag}");
        }
    }
    let o = popsent(dir.path(), &["train", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--no-such-flag"));
}

#[test]
fn unknown_unit_kind_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &with_lex(&["synth"]));
    let o = popsent(d, &with_lex(&["train", "--unit-kind", "party"]));
    assert!(!o.status.success());
    assert!(stderr_json(&o)["error"].as_str().unwrap().contains("party"));
    assert!(!d.join("models").exists());
    assert!(!d.join("match_index.csv").exists());
}

#[test]
fn conflicting_config_and_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[backend.variants]\nend_to_end = true\n").unwrap();
    let o = popsent(dir.path(), &["--config", cfg.to_str().unwrap(), "--backend", "lexical_baseline", "synth"]);
    assert!(!o.status.success());
    assert!(!dir.path().join("corpus.jsonl").exists());
    assert!(stderr_json(&o)["error"].as_str().unwrap().contains("conflict"));
}

#[test]
fn sparsity_rejects_counts_beyond_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &with_lex(&["synth"]));
    let o = popsent(d, &with_lex(&["experiment", "sparsity", "--counts", "1000"]));
    assert!(!o.status.success());
    let msg = stderr_json(&o).to_string();
    assert!(msg.contains("1000") && msg.contains("populist"), "{msg}");
}

#[test]
fn ingest_then_match_reports_rates() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    ok(&src, &with_lex(&["synth"]));
    let work = dir.path().join("work");
    let stdout = ok(
        &work,
        &[
            "ingest",
            "--corpus",
            src.join("corpus.jsonl").to_str().unwrap(),
            "--training",
            src.join("training.csv").to_str().unwrap(),
        ],
    );
    assert!(stdout.contains("24 speeches"), "{stdout}");
    let rates = ok(&work, &["match"]);
    assert!(rates.contains("populist") && rates.contains("matched"), "{rates}");
    assert!(work.join("match_rates.json").exists());
}

#[test]
fn experiments_and_report_render() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &with_lex(&["synth"]));
    ok(d, &with_lex(&["train"]));
    ok(d, &with_lex(&["evaluate"]));
    ok(d, &with_lex(&["experiment", "grid", "--repetitions", "2"]));
    ok(
        d,
        &with_lex(&["experiment", "cross-context", "--test-corpus", d.join("corpus.jsonl").to_str().unwrap(), "--speech-type", "campaign"]),
    );
    let md = ok(d, &with_lex(&["report"]));
    for section in ["Speech and speaker results", "Hyperparameter grid", "Cross-context"] {
        assert!(md.contains(section), "report lacks {section}");
    }
    for fig in ["confusion_speech.svg", "scatter_speech.svg", "grade_histogram.svg"] {
        assert!(d.join("figures").join(fig).exists(), "missing {fig}");
    }
    let cross: serde_json::Value = serde_json::from_slice(&read(d, "cross_context.json")).unwrap();
    assert_eq!(cross["n_speeches"], 12);
}

#[test]
fn published_table_renders_to_golden_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    ok(dir.path(), &["report", "--table", fixtures.join("speech_results.csv").to_str().unwrap()]);
    let got = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    let want = std::fs::read_to_string(fixtures.join("speech_results.md")).unwrap();
    assert_eq!(got, want);
}

#[test]
fn report_with_nothing_to_render_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = popsent(dir.path(), &["report"]);
    assert!(!o.status.success());
    assert!(stderr_json(&o)["error"].as_str().unwrap().contains("nothing to report"));
}
