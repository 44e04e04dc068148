use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rationale_core::augment::RationaleMode;
use rationale_core::corpus::{LabelSet, Task, Turn};
use rationale_core::fewshot::{classify_split, ClassifierSetup, ProbeItem, ProbeModel, Resolution};
use rationale_core::gateway::{
    ChatRequest, ChatResponse, Gateway, GatewayMode, ResponseCache, Transport, TransportError,
};
use rationale_core::prompt::{LabelDefinitions, ProbeExample};
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    cases: Vec<Case>,
    histogram: BTreeMap<Resolution, usize>,
}

#[derive(Deserialize)]
struct Case {
    example_id: String,
    text: String,
    answers: BTreeMap<String, String>,
    predicted: String,
    resolution: Resolution,
}

/// Answers from the fixture, keyed by (utterance text, probed label).
struct Canned(HashMap<(String, String), String>);

impl Transport for Canned {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let label = request
            .prompt
            .strip_prefix("These examples pertains to the ")
            .and_then(|s| s.split_once(' '))
            .map(|(l, _)| l.to_string())
            .unwrap();
        let query = request.prompt.rsplit("\n\n").next().unwrap();
        let text = query
            .lines()
            .find_map(|l| l.strip_prefix("[A]:"))
            .unwrap()
            .to_string();
        self.0
            .get(&(text, label))
            .map(|a| ChatResponse::stop(a.clone()))
            .ok_or_else(|| TransportError::Provider {
                status: 404,
                body: "no canned answer".into(),
            })
    }
}

fn load() -> Fixture {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/classify_canned.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn item(case: &Case) -> ProbeItem {
    ProbeItem {
        example_id: case.example_id.clone(),
        gold: case.predicted.clone(),
        example: ProbeExample {
            context: vec![Turn::new("B", "Anything new?", None)],
            response: Turn::new("A", case.text.clone(), None),
            rationales: Vec::new(),
        },
    }
}

fn run(
    fx: &Fixture,
    gateway: &Gateway,
    mode: GatewayMode,
    concurrency: usize,
) -> rationale_core::fewshot::ClassifyOutput {
    let labels = LabelSet::for_task(Task::Erc);
    let defs = LabelDefinitions::builtin(Task::Erc);
    let items: Vec<ProbeItem> = fx.cases.iter().map(item).collect();
    let setup = ClassifierSetup {
        labels: &labels,
        definitions: &defs,
        domain: "canned",
        mode: RationaleMode::None,
        shots_per_side: 0,
        seed: 1,
        model: ProbeModel::default(),
    };
    classify_split(&items, &[], &setup, gateway, mode, concurrency).unwrap()
}

#[test]
fn canned_responses_resolve_as_designed() {
    let fx = load();
    let answers = fx
        .cases
        .iter()
        .flat_map(|c| {
            c.answers
                .iter()
                .map(|(l, a)| ((c.text.clone(), l.clone()), a.clone()))
        })
        .collect();
    let cache_dir = tempfile::tempdir().unwrap();
    let gateway = Gateway::new(
        Some(ResponseCache::new(cache_dir.path())),
        Some(Arc::new(Canned(answers))),
    );
    let out = run(&fx, &gateway, GatewayMode::Record, 4);

    assert_eq!(out.records.len(), 20);
    assert!(out.failures.is_empty());
    assert_eq!(out.histogram, fx.histogram);
    for (rec, case) in out.records.iter().zip(&fx.cases) {
        assert_eq!(rec.example_id, case.example_id);
        assert_eq!(rec.predicted, case.predicted, "{}", case.example_id);
        assert_eq!(rec.resolution, case.resolution, "{}", case.example_id);
    }

    // Replaying the recorded answers reproduces the records exactly.
    let replayed = run(
        &fx,
        &Gateway::replay_only(ResponseCache::new(cache_dir.path())),
        GatewayMode::Replay,
        1,
    );
    assert_eq!(replayed.records, out.records);
}

#[test]
fn failed_probes_are_reported_per_example() {
    let fx = load();
    let mut answers: HashMap<(String, String), String> = fx
        .cases
        .iter()
        .flat_map(|c| {
            c.answers
                .iter()
                .map(|(l, a)| ((c.text.clone(), l.clone()), a.clone()))
        })
        .collect();
    answers.remove(&(fx.cases[3].text.clone(), "fear".to_string()));
    let gateway = Gateway::new(None, Some(Arc::new(Canned(answers))))
        .with_retry(rationale_core::gateway::RetryPolicy::none());
    let out = run(&fx, &gateway, GatewayMode::Live, 2);
    assert_eq!(out.records.len(), 19);
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].example_id, fx.cases[3].example_id);
}
