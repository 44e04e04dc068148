//! Multi-class prediction from one yes/no probe per label.
//!
//! Each label is probed independently. Exactly one `yes` picks that label;
//! several `yes` answers are resolved by label-set order; no `yes` falls
//! back to the majority label. Unparseable answers count as `no` but are
//! kept in the record.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::RationaleMode;
use crate::corpus::{context_window, Corpus, ExampleRef, KShot, LabelSet};
use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, Gateway, GatewayMode};
use crate::prompt::{
    build_probe_prompt, LabelDefinitions, ProbeExample, ProbeSpec, RenderedPrompt,
};
use crate::rationale::RationaleStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeAnswer {
    Yes,
    No,
    Unparseable,
}

/// Strict first-token reading of a yes/no response.
pub fn parse_answer(response: &str) -> ProbeAnswer {
    let Some(token) = response.split_whitespace().next() else {
        return ProbeAnswer::Unparseable;
    };
    let word: String = token
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => ProbeAnswer::Yes,
        "no" => ProbeAnswer::No,
        _ => ProbeAnswer::Unparseable,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryProbe {
    pub label: String,
    pub prompt: RenderedPrompt,
    pub answer: ProbeAnswer,
    pub raw: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    UniqueYes,
    TieBroken,
    DefaultMajority,
    /// Predicted directly by a fine-tuned model.
    Model,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolution::UniqueYes => "unique_yes",
            Resolution::TieBroken => "tie_broken",
            Resolution::DefaultMajority => "default_majority",
            Resolution::Model => "model",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub example_id: String,
    pub predicted: String,
    #[serde(default)]
    pub per_label: BTreeMap<String, ProbeAnswer>,
    pub resolution: Resolution,
}

/// Combines the eight answers for one example.
pub fn aggregate_probes<S>(
    answers: &BTreeMap<S, ProbeAnswer>,
    labels: &LabelSet,
) -> Result<(String, Resolution)>
where
    S: Ord + std::borrow::Borrow<str>,
{
    let mut yes = Vec::new();
    for label in &labels.labels {
        match answers.get(label.as_str()) {
            Some(ProbeAnswer::Yes) => yes.push(label),
            Some(_) => {}
            None => {
                return Err(Error::InvalidInput(format!(
                    "no probe answer for label {label:?}"
                )))
            }
        }
    }
    Ok(match yes.as_slice() {
        [only] => ((*only).clone(), Resolution::UniqueYes),
        [first, ..] => ((*first).clone(), Resolution::TieBroken),
        [] => (labels.majority_label.clone(), Resolution::DefaultMajority),
    })
}

/// Query or shot datapoint with its gold label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeItem {
    pub example_id: String,
    pub gold: String,
    pub example: ProbeExample,
}

/// Builds probe items for `refs`, attaching the rationales selected by
/// `mode`. Invalid or missing rationales are left out, as in the baseline.
pub fn probe_items(
    corpus: &Corpus,
    store: &RationaleStore,
    refs: &[ExampleRef],
    mode: RationaleMode,
    width: usize,
) -> Result<Vec<ProbeItem>> {
    refs.iter()
        .map(|r| {
            let (dialogue, turn) = corpus.resolve(r)?;
            let context = context_window(dialogue, r.turn_index, width)?.to_vec();
            let rationales = match store.get(&r.dialogue_id, r.turn_index) {
                Some(rec) if rec.valid => {
                    let set = rec.rationale_set();
                    mode.facets()
                        .iter()
                        .map(|f| (*f, set.get(*f).to_string()))
                        .collect()
                }
                _ => Vec::new(),
            };
            Ok(ProbeItem {
                example_id: r.example_id(),
                gold: turn.label.clone().expect("resolved refs are labeled"),
                example: ProbeExample {
                    context,
                    response: turn.clone(),
                    rationales,
                },
            })
        })
        .collect()
}

/// Model settings for probe requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for ProbeModel {
    fn default() -> Self {
        Self {
            model: "gpt-3.5-turbo-16k".to_string(),
            temperature: 0.0,
            max_tokens: 8,
        }
    }
}

/// Everything that stays fixed across one classification run.
#[derive(Debug, Clone)]
pub struct ClassifierSetup<'a> {
    pub labels: &'a LabelSet,
    pub definitions: &'a LabelDefinitions,
    pub domain: &'a str,
    pub mode: RationaleMode,
    /// Positive (and negative) shots per label; 0 for zero-shot.
    pub shots_per_side: usize,
    pub seed: u64,
    pub model: ProbeModel,
}

/// Samples shots for one label: up to `per_side` positives then up to
/// `per_side` negatives, each in sampled order.
pub fn sample_shots(
    pool: &[ProbeItem],
    label: &str,
    per_side: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(ProbeExample, bool)> {
    let (pos, neg): (Vec<&ProbeItem>, Vec<&ProbeItem>) = pool.iter().partition(|p| p.gold == label);
    let mut draw = |items: &[&ProbeItem], yes: bool| -> Vec<(ProbeExample, bool)> {
        let n = per_side.min(items.len());
        rand::seq::index::sample(rng, items.len(), n)
            .into_iter()
            .map(|i| (items[i].example.clone(), yes))
            .collect()
    };
    let mut shots = draw(&pos, true);
    shots.extend(draw(&neg, false));
    shots
}

/// Shots for every label, drawn label by label from one seeded generator.
pub fn sample_all_shots(
    pool: &[ProbeItem],
    labels: &LabelSet,
    per_side: usize,
    seed: u64,
) -> BTreeMap<String, Vec<(ProbeExample, bool)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels
        .labels
        .iter()
        .map(|l| {
            let shots = if per_side == 0 {
                Vec::new()
            } else {
                sample_shots(pool, l, per_side, &mut rng)
            };
            (l.clone(), shots)
        })
        .collect()
}

fn probe_request(
    setup: &ClassifierSetup<'_>,
    item: &ProbeItem,
    label: &str,
    shots: &[(ProbeExample, bool)],
) -> Result<(RenderedPrompt, ChatRequest)> {
    let spec = ProbeSpec {
        labels: setup.labels,
        domain: setup.domain,
        label,
        definition: setup.definitions.get(label)?,
    };
    let mut prompt = build_probe_prompt(spec, shots, &item.example)?;
    prompt.provenance.refs.push(item.example_id.clone());
    let request = ChatRequest {
        model: setup.model.model.clone(),
        prompt: prompt.text.clone(),
        temperature: setup.model.temperature,
        max_tokens: setup.model.max_tokens,
        request_tag: format!("probe:{}:{label}", item.example_id),
    };
    Ok((prompt, request))
}

/// Sends one probe through the gateway.
pub fn probe_example(
    setup: &ClassifierSetup<'_>,
    item: &ProbeItem,
    label: &str,
    shots: &[(ProbeExample, bool)],
    gateway: &Gateway,
    mode: GatewayMode,
) -> Result<BinaryProbe> {
    let (prompt, request) = probe_request(setup, item, label, shots)?;
    let response = gateway
        .complete(&request, mode)
        .map_err(|e| e.context(format!("probing {} for {label:?}", item.example_id)))?;
    Ok(BinaryProbe {
        label: label.to_string(),
        prompt,
        answer: parse_answer(&response.text),
        raw: response.text,
    })
}

/// First line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionsHeader {
    pub labels: Vec<String>,
    pub mode: RationaleMode,
    pub shots: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<KShot>,
    #[serde(default = "default_setting")]
    pub setting: String,
    #[serde(default)]
    pub config_hash: String,
    #[serde(default)]
    pub tie_break: String,
    #[serde(default)]
    pub source: String,
}

fn default_setting() -> String {
    "ID".to_string()
}

pub const TIE_BREAK_POLICY: &str = "label-set order";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyFailure {
    pub example_id: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct ClassifyOutput {
    pub records: Vec<PredictionRecord>,
    pub failures: Vec<ClassifyFailure>,
    pub histogram: BTreeMap<Resolution, usize>,
}

/// Probes every item for every label and aggregates the answers.
///
/// Shots come from `train_pool` only. Items whose probes fail are listed in
/// `failures` and get no record; the rest of the run continues.
pub fn classify_split(
    items: &[ProbeItem],
    train_pool: &[ProbeItem],
    setup: &ClassifierSetup<'_>,
    gateway: &Gateway,
    mode: GatewayMode,
    concurrency: usize,
) -> Result<ClassifyOutput> {
    setup.definitions.covers(setup.labels)?;
    let shots = sample_all_shots(train_pool, setup.labels, setup.shots_per_side, setup.seed);
    let mut requests = Vec::with_capacity(items.len() * setup.labels.len());
    for item in items {
        for label in &setup.labels.labels {
            requests.push(probe_request(setup, item, label, &shots[label])?.1);
        }
    }
    let responses = gateway.batch_complete(&requests, mode, concurrency)?;

    let per_item = setup.labels.len();
    let mut out = ClassifyOutput {
        records: Vec::with_capacity(items.len()),
        failures: Vec::new(),
        histogram: BTreeMap::new(),
    };
    for (item, chunk) in items.iter().zip(responses.chunks(per_item)) {
        let mut answers = BTreeMap::new();
        let mut error = None;
        for (label, resp) in setup.labels.labels.iter().zip(chunk) {
            match resp {
                Ok(r) => {
                    answers.insert(label.clone(), parse_answer(&r.text));
                }
                Err(e) => {
                    error.get_or_insert_with(|| format!("{label}: {e}"));
                }
            }
        }
        if let Some(error) = error {
            out.failures.push(ClassifyFailure {
                example_id: item.example_id.clone(),
                error,
            });
            continue;
        }
        let (predicted, resolution) = aggregate_probes(&answers, setup.labels)?;
        *out.histogram.entry(resolution).or_default() += 1;
        out.records.push(PredictionRecord {
            example_id: item.example_id.clone(),
            predicted,
            per_label: answers,
            resolution,
        });
    }
    Ok(out)
}
