use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rationale_core::augment::{
    augment_corpus, export_finetune_bundle, ExampleStream, Hyperparameters, RationaleMode,
    Selection,
};
use rationale_core::corpus::{load_corpus, LabelSet, Task};
use rationale_core::pipeline::{Overrides, RunConfig, RunContext};
use rationale_core::rationale::{RationaleRecord, RationaleSet, RationaleStore, ValidityRules};
use rationale_core::Error;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/erc")
}

fn context(out: &Path) -> RunContext {
    let overrides = Overrides {
        output_dir: Some(out.to_string_lossy().into_owned()),
        ..Overrides::default()
    };
    RunContext::new(RunConfig::load(&fixture_dir().join("config.json"), &overrides).unwrap())
}

fn store_with_invalid(n_invalid: usize) -> RationaleStore {
    let corpus = load_corpus(fixture_dir().join("corpus.jsonl"), Task::Erc).unwrap();
    let rules = ValidityRules::default();
    let mut records = Vec::new();
    let mut invalid = 0;
    for d in &corpus.dialogues {
        for (i, t) in d.turns.iter().enumerate() {
            let rs = if invalid < n_invalid {
                invalid += 1;
                RationaleSet::new("Somebody else talks.", "a", "b")
            } else {
                RationaleSet::new(&format!("{} speaks.", t.speaker), "a", "b")
            };
            records.push(RationaleRecord::new(
                &d.dialogue_id,
                i,
                &rs,
                &rules.validate(&rs, &t.speaker),
            ));
        }
    }
    RationaleStore::new(records)
}

#[test]
fn augmentation_counts_on_the_fixture() {
    let corpus = load_corpus(fixture_dir().join("corpus.jsonl"), Task::Erc).unwrap();
    let store = store_with_invalid(7);
    let none = augment_corpus(
        &corpus,
        &store,
        RationaleMode::None,
        Selection::Full(None),
        5,
        None,
    )
    .unwrap();
    assert_eq!(none.examples.len(), 140);
    assert_eq!(none.summary.fallbacks, 0);

    let all = augment_corpus(
        &corpus,
        &store,
        RationaleMode::All,
        Selection::Full(None),
        5,
        None,
    )
    .unwrap();
    assert_eq!(all.summary.fallbacks, 7);
    assert_eq!(
        all.examples.iter().filter(|e| e.fallback_applied).count(),
        7
    );

    let again = augment_corpus(
        &corpus,
        &store,
        RationaleMode::All,
        Selection::Full(None),
        5,
        None,
    )
    .unwrap();
    assert_eq!(
        serde_json::to_string(&again.examples).unwrap(),
        serde_json::to_string(&all.examples).unwrap()
    );
}

#[test]
fn bundle_manifest_defaults_and_errors() {
    let corpus = load_corpus(fixture_dir().join("corpus.jsonl"), Task::Erc).unwrap();
    let store = store_with_invalid(0);
    let labels = LabelSet::for_task(Task::Erc);
    let ex = augment_corpus(
        &corpus,
        &store,
        RationaleMode::Int,
        Selection::Full(None),
        5,
        None,
    )
    .unwrap()
    .examples;
    let stream = |examples| ExampleStream {
        labels: &labels,
        examples,
    };
    let dir = tempfile::tempdir().unwrap();
    let export = |dev| {
        export_finetune_bundle(
            dir.path(),
            stream(&ex[..100]),
            stream(dev),
            stream(&ex[120..]),
            RationaleMode::Int,
            Hyperparameters::default(),
            serde_json::json!({}),
        )
    };
    let (manifest, hash) = export(&ex[100..120]).unwrap();
    let h = &manifest.hyperparameters;
    assert_eq!(
        (
            h.max_seq_len,
            h.learning_rate,
            h.batch_size,
            h.epochs,
            h.patience
        ),
        (512, 2e-5, 16, 15, 5)
    );
    assert_eq!(manifest.separator, "[SEP]");
    assert_eq!(export(&ex[100..120]).unwrap().1, hash);

    let err = export(&[]).unwrap_err();
    assert!(matches!(err, Error::EmptySplit(_)));
    assert!(err.to_string().contains("empty split"));
}

#[test]
fn stages_refuse_files_from_another_config() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = context(dir.path());
    ctx.ingest().unwrap();

    let mut other = ctx.config.clone();
    other.context_width = 3;
    let other = RunContext::new(other);
    assert_ne!(other.hash, ctx.hash);
    let err = other.split().unwrap_err();
    assert!(matches!(err, Error::HashMismatch { .. }), "{err}");
    assert!(err.is_validation());
    other.force(true).split().unwrap();
}

#[test]
fn missing_upstream_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let err = context(dir.path()).augment().unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("corpus.jsonl"), "{msg}");
    assert!(err.is_validation());
}

#[test]
fn rerunning_a_stage_rewrites_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = context(dir.path());
    ctx.ingest().unwrap();
    ctx.rationalize().unwrap();
    let first = std::fs::read(dir.path().join("rationales.jsonl")).unwrap();
    ctx.rationalize().unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("rationales.jsonl")).unwrap(),
        first
    );
}

/// Macro-F1 recomputed from raw per-class counts.
fn brute_macro_f1(gold: &[String], pred: &[String], labels: &[String]) -> f64 {
    labels
        .iter()
        .map(|l| {
            let tp = gold
                .iter()
                .zip(pred)
                .filter(|(g, p)| *g == l && *p == l)
                .count() as f64;
            let fp = gold
                .iter()
                .zip(pred)
                .filter(|(g, p)| *g != l && *p == l)
                .count() as f64;
            let fn_ = gold
                .iter()
                .zip(pred)
                .filter(|(g, p)| *g == l && *p != l)
                .count() as f64;
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fn_)
            }
        })
        .sum::<f64>()
        / labels.len() as f64
}

#[test]
fn evaluate_matches_an_independent_scorer() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = context(dir.path());
    ctx.run_all().unwrap();

    let corpus = load_corpus(fixture_dir().join("corpus.jsonl"), Task::Erc).unwrap();
    let gold: BTreeMap<String, String> = corpus
        .dialogues
        .iter()
        .flat_map(|d| {
            d.turns
                .iter()
                .enumerate()
                .map(move |(i, t)| (format!("{}#{i}", d.dialogue_id), t.label.clone().unwrap()))
        })
        .collect();
    let labels = LabelSet::for_task(Task::Erc).labels;
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let entries = report["reports"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    for entry in entries {
        let mode = entry["mode"].as_str().unwrap();
        for (seed, f1) in entry["report"]["per_seed"].as_object().unwrap() {
            let path = dir
                .path()
                .join(format!("predictions/ID/{mode}/k5_seed{seed}.jsonl"));
            let lines: Vec<serde_json::Value> = std::fs::read_to_string(path)
                .unwrap()
                .lines()
                .skip(1)
                .map(|l| serde_json::from_str(l).unwrap())
                .collect();
            let g: Vec<String> = lines
                .iter()
                .map(|r| gold[r["example_id"].as_str().unwrap()].clone())
                .collect();
            let p: Vec<String> = lines
                .iter()
                .map(|r| r["predicted"].as_str().unwrap().to_string())
                .collect();
            let want = brute_macro_f1(&g, &p, &labels);
            assert!(
                (f1.as_f64().unwrap() - want).abs() < 1e-9,
                "{mode} seed {seed}"
            );
        }
    }
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(&ctx.hash)));
}

#[test]
fn report_refuses_a_foreign_report_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = context(dir.path());
    ctx.run_all().unwrap();
    let path = dir.path().join("report.json");
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace(&ctx.hash, "0000000000000000");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(ctx.report(), Err(Error::HashMismatch { .. })));
    let forced = context(dir.path()).force(true);
    forced.report().unwrap();
}
