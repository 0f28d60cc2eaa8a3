//! Acceptance gate. Prints one PASS, FAIL or SKIP line per criterion and
//! exits nonzero if any criterion fails.
//!
//! Criterion 9 needs the original datasets and runs only when
//! `POPSENT_FULL_DATA_DIR` is set.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use popsent::io;
use popsent::vectors::VectorCache;
use popsent_core::backend::{holdout_eval, BackendConfig, ConfiguredBackend};
use popsent_core::corpus::{split_sentences, validate_corpus, BinaryLabel, Category, Grade, SpeechType};
use popsent_core::experiments::{
    evaluate_level, sample_per_class, sparsity_experiment, StumpSettings, DEFAULT_SPARSITY_COUNTS,
};
use popsent_core::leakage::build_match_index;
use popsent_core::metrics::{auroc, classification_metrics, ConfusionMatrix};
use popsent_core::pipeline::{
    aggregate_speaker, audit_leakage, plan_units, run_pipeline, CategoryCounts, SpeechPrediction, UnitKind,
};
use popsent_core::synth::{generate_corpus, SynthSpec};
use popsent_core::thresholding::{fit_stump, fit_stump_deterministic};
use popsent_core::ThresholdMode;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn within(elapsed: Duration, limit_secs: u64, ok: Outcome) -> Outcome {
    match ok {
        Pass(m) if elapsed > Duration::from_secs(limit_secs) => {
            Fail(format!("{m}; took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64()))
        }
        Pass(m) => Pass(format!("{m} in {:.2}s", elapsed.as_secs_f64())),
        other => other,
    }
}

// Definitional formulas, written out independently of the library.
fn oracle_metrics(tp: u64, fp: u64, fn_: u64, tn: u64) -> [f64; 6] {
    let (tp, fp, fn_, tn) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let p = div(tp, tp + fp);
    let r = div(tp, tp + fn_);
    let fb = |b2: f64| div((1.0 + b2) * p * r, b2 * p + r);
    let mcc = div(tp * tn - fp * fn_, ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt());
    [(tp + tn) / (tp + fp + fn_ + tn), p, r, fb(1.0), fb(4.0), mcc]
}

fn metric_oracle() -> Outcome {
    let t = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let cap = [3u64, 20, 1000][i % 3];
        let mut cm = [0u64; 4];
        while cm.iter().sum::<u64>() == 0 {
            cm = [r.gen_range(0..=cap), r.gen_range(0..=cap), r.gen_range(0..=cap), r.gen_range(0..=cap)];
        }
        let m = classification_metrics(&ConfusionMatrix::new(cm[0], cm[1], cm[2], cm[3])).unwrap();
        let got = [m.accuracy, m.precision, m.recall, m.f1, m.f2, m.mcc];
        for (g, e) in got.iter().zip(oracle_metrics(cm[0], cm[1], cm[2], cm[3])) {
            worst = worst.max((g - e).abs());
        }
    }
    let spot = classification_metrics(&ConfusionMatrix::new(2, 1, 1, 2)).unwrap();
    let spot_err = [(spot.mcc, 1.0 / 3.0), (spot.f1, 2.0 / 3.0), (spot.f2, 2.0 / 3.0)]
        .iter()
        .map(|(g, e)| (g - e).abs())
        .fold(0.0, f64::max);
    let out = if worst <= 1e-12 && spot_err <= 1e-12 {
        Pass(format!("1000 matrices, max deviation {worst:.1e}; tp=2,tn=2,fp=1,fn=1 gives MCC 1/3, F1 = F2 = 2/3"))
    } else {
        Fail(format!("max deviation {worst:.3e}, spot deviation {spot_err:.3e} (tolerance 1e-12)"))
    };
    within(t.elapsed(), 5, out)
}

fn pairwise_auroc(scores: &[f64], truths: &[BinaryLabel]) -> f64 {
    let mut twice = 0u64;
    let (mut pos, mut neg) = (0u64, 0u64);
    for (s, t) in scores.iter().zip(truths) {
        if t.is_populist() {
            pos += 1;
        } else {
            neg += 1;
        }
        if !t.is_populist() {
            continue;
        }
        for (s2, t2) in scores.iter().zip(truths) {
            if t2.is_populist() {
                continue;
            }
            twice += if s > s2 { 2 } else if s == s2 { 1 } else { 0 };
        }
    }
    twice as f64 / (2 * pos * neg) as f64
}

fn auroc_oracle() -> Outcome {
    let t = Instant::now();
    let mut r = rng(2);
    let mut mismatches = 0;
    let mut worst_complement = 0.0f64;
    for i in 0..500 {
        let n = r.gen_range(2..=50);
        let mut truths: Vec<BinaryLabel> = (0..n).map(|_| BinaryLabel::from_bool(r.gen_bool(0.4))).collect();
        truths[0] = BinaryLabel::Populist;
        truths[1] = BinaryLabel::NonPopulist;
        truths.shuffle(&mut r);
        // Every other set is drawn from a coarse grid so ties are common.
        let scores: Vec<f64> = if i % 2 == 0 {
            (0..n).map(|_| r.gen_range(0..=10) as f64 / 10.0).collect()
        } else {
            let mut grid: Vec<u32> = (0..=1000).collect();
            grid.shuffle(&mut r);
            grid[..n].iter().map(|&k| k as f64 / 1000.0).collect()
        };
        let a = auroc(&scores, &truths).unwrap();
        if a != pairwise_auroc(&scores, &truths) {
            mismatches += 1;
        }
        if i % 2 == 1 {
            let flipped: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
            let b = auroc(&flipped, &truths).unwrap();
            worst_complement = worst_complement.max((b - (1.0 - a)).abs());
        }
    }
    let out = if mismatches == 0 && worst_complement <= 1e-12 {
        Pass(format!("500 sets agree with pairwise counting exactly; complement deviation {worst_complement:.1e}"))
    } else {
        Fail(format!("{mismatches} pairwise mismatches, complement deviation {worst_complement:.3e}"))
    };
    within(t.elapsed(), 10, out)
}

fn lexical() -> ConfiguredBackend {
    ConfiguredBackend::new(BackendConfig::lexical()).unwrap()
}

fn leakage_invariant() -> Outcome {
    let backend = lexical();
    let mut violations = 0;
    let mut excluded = 0;
    let mut control = 0;
    for seed in 0..20u64 {
        let spec = SynthSpec { seed, ..SynthSpec::default() };
        let s = generate_corpus(&spec).unwrap();
        let index = build_match_index(&s.training, &s.corpus, 0.8).unwrap();
        let units = plan_units(&s.corpus, UnitKind::Term, &index);
        let result = run_pipeline(&backend, &s.corpus, &s.training, &index, UnitKind::Term, seed).unwrap();
        violations += audit_leakage(&units, &result.units, &index).len();
        excluded += result.units.iter().map(|u| u.excluded).sum::<usize>();
        // The audit must notice training that ignores the exclusion sets.
        let leaky: Vec<_> = result
            .units
            .iter()
            .cloned()
            .map(|mut u| {
                u.used_keys = s.training.iter().map(|t| t.key()).collect();
                u
            })
            .collect();
        control += audit_leakage(&units, &leaky, &index).len();
    }
    if violations == 0 && excluded > 0 && control > 0 {
        Pass(format!(
            "20 runs, 0 violations; {excluded} sentences excluded; unfiltered training would give {control}"
        ))
    } else {
        Fail(format!("{violations} violations, {excluded} excluded, control found {control}"))
    }
}

fn end_to_end_recovery() -> Outcome {
    let t = Instant::now();
    let spec = SynthSpec::default();
    let s = generate_corpus(&spec).unwrap();
    let shape = (s.corpus.speaker_count(), s.corpus.len(), spec.sentences_per_speech, spec.noise);
    if shape != (6, 24, 20, 0.0) {
        return Fail(format!("synthetic corpus shape {shape:?}"));
    }
    let index = build_match_index(&s.training, &s.corpus, 0.8).unwrap();
    let result = run_pipeline(&lexical(), &s.corpus, &s.training, &index, UnitKind::Term, 0).unwrap();

    let exact = result
        .speeches
        .iter()
        .filter(|p| p.populist_fraction == s.truth.speech(&p.speech_id).unwrap().planted_fraction)
        .count();
    let planted: Vec<BinaryLabel> =
        result.speeches.iter().map(|p| s.truth.speech(&p.speech_id).unwrap().human_score.binarize()).collect();
    let fractions: Vec<f64> = result.speeches.iter().map(|p| p.populist_fraction).collect();
    let settings = StumpSettings::default();
    let speech = evaluate_level(&fractions, &planted, &settings, 0).unwrap();

    let speaker_truth: Vec<BinaryLabel> = result
        .speakers
        .iter()
        .map(|sp| {
            let grades: Vec<f64> = s
                .truth
                .speeches
                .iter()
                .filter(|t| t.speaker_id == sp.speaker_id)
                .map(|t| t.human_score.value())
                .collect();
            BinaryLabel::from_bool(grades.iter().sum::<f64>() / grades.len() as f64 >= 0.5)
        })
        .collect();
    let speaker_fractions: Vec<f64> = result.speakers.iter().map(|p| p.populist_fraction).collect();
    let speaker = evaluate_level(&speaker_fractions, &speaker_truth, &settings, 1).unwrap();

    let (mut low, mut high) = (f64::NEG_INFINITY, f64::INFINITY);
    for t in &s.truth.speeches {
        if t.human_score.binarize().is_populist() {
            high = high.min(t.planted_fraction);
        } else {
            low = low.max(t.planted_fraction);
        }
    }
    let cut = speech.stump.threshold;
    let detail = format!(
        "speech accuracy {:.3}, speaker accuracy {:.3}, cutoff {cut:.3} between clusters ({low:.2}, {high:.2}), {exact}/24 fractions exact",
        speech.metrics.accuracy, speaker.metrics.accuracy
    );
    let ok = speech.metrics.accuracy >= 0.95
        && speaker.metrics.accuracy == 1.0
        && low < cut
        && cut < high
        && speech.stump.degenerate.is_none();
    within(t.elapsed(), 60, if ok { Pass(detail) } else { Fail(detail) })
}

/// Exhaustive Gini search over midpoints between consecutive distinct
/// values, ties to the smaller threshold.
fn oracle_threshold(xs: &[f64], ys: &[bool]) -> f64 {
    let mut vals: Vec<f64> = xs.to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let gini = |pos: f64, n: f64| if n == 0.0 { 0.0 } else { 1.0 - (pos / n).powi(2) - ((n - pos) / n).powi(2) };
    let mut best = (f64::INFINITY, f64::NAN);
    for w in vals.windows(2) {
        let m = w[0] + (w[1] - w[0]) / 2.0;
        let (mut ln, mut lp, mut rn, mut rp) = (0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(ys) {
            let p = if y { 1.0 } else { 0.0 };
            if x < m {
                ln += 1.0;
                lp += p;
            } else {
                rn += 1.0;
                rp += p;
            }
        }
        let g = (ln * gini(lp, ln) + rn * gini(rp, rn)) / xs.len() as f64;
        if g < best.0 - 1e-15 {
            best = (g, m);
        }
    }
    best.1
}

fn stump_oracle() -> Outcome {
    let mut r = rng(5);
    let mut bad_accuracy = 0;
    let mut bad_threshold = 0;
    let mut not_reproducible = 0;
    for i in 0..200u64 {
        let n = r.gen_range(2..=60);
        let cut: f64 = r.gen_range(0.05..0.95);
        let gap: f64 = r.gen_range(0.001..0.05);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..n {
            let populist = if k < 2 { k == 0 } else { r.gen_bool(0.5) };
            let x = if populist { r.gen_range(cut + gap..=1.0) } else { r.gen_range(0.0..cut - gap) };
            xs.push(x);
            ys.push(populist);
        }
        let labels: Vec<BinaryLabel> = ys.iter().map(|&y| BinaryLabel::from_bool(y)).collect();
        let d = fit_stump_deterministic(&xs, &labels).unwrap();
        if d.classify_all(&xs).unwrap() != labels {
            bad_accuracy += 1;
        }
        if d.threshold != oracle_threshold(&xs, &ys) {
            bad_threshold += 1;
        }
        let a = fit_stump(&xs, &labels, 50, i).unwrap();
        let b = fit_stump(&xs, &labels, 50, i).unwrap();
        if a.threshold.to_bits() != b.threshold.to_bits() || a.histogram != b.histogram {
            not_reproducible += 1;
        }
        if a.classify_all(&xs).unwrap() != labels {
            bad_accuracy += 1;
        }
    }
    if bad_accuracy + bad_threshold + not_reproducible == 0 {
        Pass("200 separable sets: training accuracy 1.0, thresholds equal exhaustive search, bootstrap bit-identical".into())
    } else {
        Fail(format!(
            "{bad_accuracy} imperfect fits, {bad_threshold} threshold mismatches, {not_reproducible} irreproducible bootstraps"
        ))
    }
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn strip_ws(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn splitting_conservation() -> Outcome {
    let mut r = rng(6);
    let alphabet: Vec<char> = "abcXYZ019'\",;:-  \t\n.!?…é".chars().collect();
    let (mut lost, mut spaced, mut spaced_bad) = (0, 0, 0);
    for _ in 0..1000 {
        let len = r.gen_range(0..120);
        let text: String = (0..len).map(|_| *alphabet.choose(&mut r).unwrap()).collect();
        let parts = split_sentences(&text);
        if strip_ws(&parts.concat()) != strip_ws(&text) {
            lost += 1;
        }
        let chars: Vec<char> = text.chars().collect();
        // Splitting inserts a boundary after every terminator, so the
        // single-space rejoin only holds where one was already there.
        let spaced_boundaries = chars.iter().enumerate().all(|(i, c)| {
            !matches!(c, '.' | '!' | '?') || chars.get(i + 1).is_none_or(|n| n.is_whitespace())
        });
        if spaced_boundaries {
            spaced += 1;
            if collapse(&parts.join(" ")) != collapse(&text) {
                spaced_bad += 1;
            }
        }
    }
    let fixture = split_sentences("Are we safe");
    let fixture_ok = fixture == ["Are we safe"];
    if lost == 0 && spaced_bad == 0 && fixture_ok && spaced > 0 {
        Pass(format!(
            "1000 texts conserve every non-whitespace character; {spaced} with spaced boundaries rejoin exactly; \"Are we safe\" kept whole"
        ))
    } else {
        Fail(format!("{lost} texts lost characters, {spaced_bad}/{spaced} spaced texts differ, fixture {fixture:?}"))
    }
}

const TABLE_COUNTS: [usize; 12] = [1000, 400, 250, 150, 100, 90, 80, 70, 60, 50, 40, 30];

fn sparsity_shape() -> Outcome {
    let s = generate_corpus(&SynthSpec::default()).unwrap();
    let counts = [40, 30, 20, 12, 6];
    let backend = lexical();
    let a = sparsity_experiment(&backend, &s.training, &counts, 0.75, 7).unwrap();
    let b = sparsity_experiment(&backend, &s.training, &counts, 0.75, 7).unwrap();
    let rows_match = a.len() == counts.len()
        && a.iter().zip(counts).all(|(r, c)| r.sentences_per_class == c && r.n_train + r.n_test == 3 * c);
    let per_class_exact = counts.iter().all(|&c| {
        let sample = sample_per_class(&s.training, c, 7).unwrap();
        Category::ALL.iter().all(|&k| sample.iter().filter(|t| t.category == k).count() == c)
    });
    let bits = |rows: &[popsent_core::experiments::SparsityRow]| -> Vec<u64> {
        rows.iter()
            .flat_map(|r| {
                let m = r.metrics;
                [m.accuracy, m.precision, m.recall, m.f1, m.mcc].map(f64::to_bits)
            })
            .collect()
    };
    let identical = a == b && bits(&a) == bits(&b);
    let defaults = DEFAULT_SPARSITY_COUNTS == TABLE_COUNTS;
    if rows_match && per_class_exact && identical && defaults {
        Pass(format!(
            "{} rows for {} counts, exact per-class samples, bit-identical rerun, default counts {:?}",
            a.len(),
            counts.len(),
            DEFAULT_SPARSITY_COUNTS
        ))
    } else {
        Fail(format!(
            "rows match {rows_match}, per-class exact {per_class_exact}, identical {identical}, defaults {defaults}"
        ))
    }
}

fn prediction(i: usize, n: usize, populist: usize) -> SpeechPrediction {
    SpeechPrediction {
        speech_id: format!("s{i}"),
        speaker_id: "spk".into(),
        unit_id: "spk".into(),
        speech_type: SpeechType::Campaign,
        n_sentences: n,
        counts: CategoryCounts {
            populist,
            pluralist: 0,
            neutral: n - populist,
        },
        populist_fraction: populist as f64 / n as f64,
        pluralist_fraction: 0.0,
        human_score: Grade::from_tenths(0).unwrap(),
    }
}

fn aggregation_identity() -> Outcome {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    let (mut unequal_lengths, mut coincide, mut wrong_difference) = (0, 0, 0);
    for _ in 0..500 {
        let k = r.gen_range(1..=6);
        let preds: Vec<SpeechPrediction> = (0..k)
            .map(|i| {
                let n = r.gen_range(1..=40);
                prediction(i, n, r.gen_range(0..=n))
            })
            .collect();
        let sp = aggregate_speaker(&preds).unwrap();
        let total: usize = preds.iter().map(|p| p.n_sentences).sum();
        let weighted: f64 = preds.iter().map(|p| p.n_sentences as f64 * p.populist_fraction).sum::<f64>() / total as f64;
        worst = worst.max((sp.populist_fraction - weighted).abs());

        if preds.iter().any(|p| p.n_sentences != preds[0].n_sentences) {
            unequal_lengths += 1;
            // Exact rational comparison of pooled P/N against the
            // unweighted mean (1/k) * sum(p_i / n_i).
            let prod: u128 = preds.iter().map(|p| p.n_sentences as u128).product();
            let pooled_num: u128 = preds.iter().map(|p| p.counts.populist as u128).sum::<u128>() * k as u128 * prod;
            let mean_num: u128 = total as u128
                * preds
                    .iter()
                    .map(|p| p.counts.populist as u128 * (prod / p.n_sentences as u128))
                    .sum::<u128>();
            let unweighted = preds.iter().map(|p| p.populist_fraction).sum::<f64>() / k as f64;
            let differs = (sp.populist_fraction - unweighted).abs() > 1e-12;
            if pooled_num == mean_num {
                coincide += 1;
            }
            if differs != (pooled_num != mean_num) {
                wrong_difference += 1;
            }
        }
    }
    // Two speeches of different lengths and different fractions always
    // separate the pooled from the unweighted mean.
    let mut two_case_bad = 0;
    for _ in 0..500 {
        let (n1, n2) = (r.gen_range(1..=40), r.gen_range(1..=40));
        let (p1, p2) = (r.gen_range(0..=n1), r.gen_range(0..=n2));
        if n1 == n2 || p1 * n2 == p2 * n1 {
            continue;
        }
        let sp = aggregate_speaker(&[prediction(0, n1, p1), prediction(1, n2, p2)]).unwrap();
        let unweighted = (p1 as f64 / n1 as f64 + p2 as f64 / n2 as f64) / 2.0;
        if (sp.populist_fraction - unweighted).abs() <= 1e-12 {
            two_case_bad += 1;
        }
    }
    if worst <= 1e-12 && wrong_difference == 0 && two_case_bad == 0 {
        Pass(format!(
            "500 sets, max deviation from weighted mean {worst:.1e}; pooled differs from the unweighted mean in all {} unequal-length sets except {coincide} whose fractions make them coincide exactly",
            unequal_lengths
        ))
    } else {
        Fail(format!(
            "max deviation {worst:.3e}, {wrong_difference} sets where the difference disagrees with exact arithmetic, {two_case_bad} two-speech failures"
        ))
    }
}

const FULL_DATA_ENV: &str = "POPSENT_FULL_DATA_DIR";

fn load_full(dir: &Path, name: &str) -> anyhow::Result<(popsent_core::Corpus, Vec<popsent_core::TrainingSentence>)> {
    let jsonl = dir.join(format!("{name}.jsonl"));
    let path = if jsonl.exists() { jsonl } else { dir.join(format!("{name}.csv")) };
    let (corpus, _) = io::load_corpus(&path, name)?;
    let (corpus, _) = validate_corpus(corpus)?;
    let training = io::load_training(&dir.join(format!("{name}_training.csv")))?;
    Ok((corpus, training))
}

fn full_data_run(dir: &Path) -> anyhow::Result<Outcome> {
    let cache = VectorCache::from_env()?;
    let config = BackendConfig::default();
    let backend = ConfiguredBackend::new(config.clone())?.with_encoders(cache.encoders(config.embedding.dim));
    let settings = StumpSettings {
        mode: ThresholdMode::Bootstrap,
        ..StumpSettings::default()
    };
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, kind, speech_target, sentence_target) in [
        ("governors", UnitKind::Term, 0.85, 0.66),
        ("presidential", UnitKind::Speaker, 0.89, 0.70),
    ] {
        let (corpus, training) = load_full(dir, name)?;
        let index = build_match_index(&training, &corpus, 0.8)?;
        let result = run_pipeline(&backend, &corpus, &training, &index, kind, 0)?;
        let fractions: Vec<f64> = result.speeches.iter().map(|p| p.populist_fraction).collect();
        let truths: Vec<BinaryLabel> = result.speeches.iter().map(|p| p.truth()).collect();
        let speech = evaluate_level(&fractions, &truths, &settings, 0)?.metrics.accuracy;
        let sentence = holdout_eval(&backend, &training, config.train_fraction, 0)?.accuracy;
        ok &= (speech - speech_target).abs() <= 0.05 && (sentence - sentence_target).abs() <= 0.05;
        lines.push(format!(
            "{name}: speech accuracy {speech:.3} (target {speech_target}), sentence accuracy {sentence:.3} (target {sentence_target})"
        ));
    }
    let detail = lines.join("; ");
    Ok(if ok { Pass(detail) } else { Fail(detail) })
}

fn full_data() -> Outcome {
    let Some(dir) = std::env::var_os(FULL_DATA_ENV).filter(|d| !d.is_empty()) else {
        return Skip(format!("{FULL_DATA_ENV} not set"));
    };
    match full_data_run(Path::new(&dir)) {
        Ok(o) => o,
        Err(e) => Fail(format!("{e:#}")),
    }
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("metric oracle equivalence", metric_oracle),
        ("AuROC pairwise oracle", auroc_oracle),
        ("leakage invariant", leakage_invariant),
        ("end-to-end oracle recovery", end_to_end_recovery),
        ("stump oracle", stump_oracle),
        ("splitting conservation", splitting_conservation),
        ("sparsity harness shape", sparsity_shape),
        ("aggregation identity", aggregation_identity),
        ("full-data tier", full_data),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag} {} {name}: {detail}", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
