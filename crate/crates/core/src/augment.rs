//! Classifier inputs with rationales joined by a separator token, plus
//! export of fine-tuning bundles.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{context_window, Corpus, ExampleRef, KShotSplit, LabelSet, Turn};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::rationale::{Facet, RationaleSet, RationaleStore};

/// The literal separator token.
pub const SEP_TOKEN: &str = "[SEP]";
/// The token with its surrounding spaces, as it appears between segments.
pub const SEPARATOR: &str = " [SEP] ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RationaleMode {
    #[serde(rename = "NONE")]
    None,
    #[serde(rename = "INT")]
    Int,
    #[serde(rename = "ASM")]
    Asm,
    #[serde(rename = "IMP")]
    Imp,
    #[serde(rename = "ALL")]
    All,
}

impl RationaleMode {
    pub const EVERY: [RationaleMode; 5] = [
        RationaleMode::None,
        RationaleMode::Int,
        RationaleMode::Asm,
        RationaleMode::Imp,
        RationaleMode::All,
    ];

    /// Facets included by this mode, in concatenation order.
    pub fn facets(self) -> &'static [Facet] {
        match self {
            RationaleMode::None => &[],
            RationaleMode::Int => &[Facet::Intention],
            RationaleMode::Asm => &[Facet::Assumption],
            RationaleMode::Imp => &[Facet::Implicit],
            RationaleMode::All => &Facet::ALL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RationaleMode::None => "NONE",
            RationaleMode::Int => "INT",
            RationaleMode::Asm => "ASM",
            RationaleMode::Imp => "IMP",
            RationaleMode::All => "ALL",
        }
    }
}

impl fmt::Display for RationaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RationaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RationaleMode::EVERY
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown rationale mode {s:?}")))
    }
}

/// A rationale set together with its validity verdict.
#[derive(Debug, Clone, Copy)]
pub struct Rationale<'a> {
    pub set: &'a RationaleSet,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedInput {
    pub text: String,
    pub fallback_applied: bool,
}

/// Segment text may not contain the separator itself.
fn segment(s: &str) -> String {
    s.replace(SEP_TOKEN, "[sep]")
}

/// Renders `context [SEP] utterance [SEP] rationale...`.
///
/// The context segment holds the window as `Speaker: text` lines and is
/// left out when the window is empty. An invalid rationale set falls back
/// to the `NONE` rendering.
pub fn render_input(
    window: &[Turn],
    target: &Turn,
    rationale: Option<Rationale<'_>>,
    mode: RationaleMode,
) -> Result<RenderedInput> {
    if mode != RationaleMode::None && rationale.is_none() {
        return Err(Error::MissingRationale(mode.to_string()));
    }
    let mut segments = Vec::with_capacity(5);
    if !window.is_empty() {
        segments.push(segment(
            &window
                .iter()
                .map(Turn::render)
                .collect::<Vec<_>>()
                .join("\n"),
        ));
    }
    segments.push(segment(&target.text));

    let mut fallback_applied = false;
    if let Some(r) = rationale.filter(|_| mode != RationaleMode::None) {
        if r.valid {
            segments.extend(mode.facets().iter().map(|f| segment(r.set.get(*f))));
        } else {
            fallback_applied = true;
        }
    }
    Ok(RenderedInput {
        text: segments.join(SEPARATOR),
        fallback_applied,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedExample {
    pub example_id: String,
    pub input_text: String,
    pub label: String,
    pub mode: RationaleMode,
    pub fallback_applied: bool,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub split_tags: BTreeSet<String>,
}

/// Which labeled turns to augment.
#[derive(Debug, Clone, Copy)]
pub enum Selection<'a> {
    /// The refs of a k-shot split, label by label.
    KShot(&'a KShotSplit),
    /// Every labeled turn, optionally restricted to some dialogues.
    Full(Option<&'a BTreeSet<String>>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentSummary {
    pub mode: Option<RationaleMode>,
    pub examples: usize,
    pub fallbacks: usize,
    pub missing_rationales: usize,
    pub invalid_rationales: usize,
}

#[derive(Debug, Clone)]
pub struct Augmented {
    pub examples: Vec<AugmentedExample>,
    pub summary: AugmentSummary,
}

/// One example per selected labeled turn. Turns without a stored rationale
/// are treated as having an invalid one.
pub fn augment_corpus(
    corpus: &Corpus,
    store: &RationaleStore,
    mode: RationaleMode,
    selection: Selection<'_>,
    width: usize,
    tag: Option<&str>,
) -> Result<Augmented> {
    let refs: Vec<ExampleRef> = match selection {
        Selection::KShot(split) => split.refs(&corpus.labels).cloned().collect(),
        Selection::Full(ids) => corpus.labeled_refs(ids),
    };
    let missing = RationaleSet::default();
    let mut summary = AugmentSummary {
        mode: Some(mode),
        ..AugmentSummary::default()
    };
    let mut examples = Vec::with_capacity(refs.len());
    for r in refs {
        let (dialogue, target) = corpus.resolve(&r)?;
        let window = context_window(dialogue, r.turn_index, width)?;
        let record = store.get(&r.dialogue_id, r.turn_index);
        let set = record.map(|rec| rec.rationale_set());
        let rationale = match (&set, record) {
            (Some(set), Some(rec)) => Rationale {
                set,
                valid: rec.valid,
            },
            _ => Rationale {
                set: &missing,
                valid: false,
            },
        };
        if mode != RationaleMode::None {
            match record {
                None => summary.missing_rationales += 1,
                Some(rec) if !rec.valid => summary.invalid_rationales += 1,
                _ => {}
            }
        }
        let rendered = render_input(window, target, Some(rationale), mode)?;
        summary.fallbacks += usize::from(rendered.fallback_applied);
        examples.push(AugmentedExample {
            example_id: r.example_id(),
            input_text: rendered.text,
            label: target.label.clone().expect("resolved refs are labeled"),
            mode,
            fallback_applied: rendered.fallback_applied,
            split_tags: tag
                .map(|t| BTreeSet::from([t.to_string()]))
                .unwrap_or_default(),
        });
    }
    summary.examples = examples.len();
    Ok(Augmented { examples, summary })
}

/// Fine-tuning defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub max_seq_len: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: String,
    pub patience: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            max_seq_len: 512,
            learning_rate: 2e-5,
            batch_size: 16,
            epochs: 15,
            optimizer: "Adam".to_string(),
            patience: 5,
        }
    }
}

/// Examples of one partition plus the label set they were drawn under.
#[derive(Debug, Clone)]
pub struct ExampleStream<'a> {
    pub labels: &'a LabelSet,
    pub examples: &'a [AugmentedExample],
}

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format_version: u32,
    pub task: crate::corpus::Task,
    pub labels: Vec<String>,
    pub majority_label: String,
    pub mode: RationaleMode,
    pub separator: String,
    pub counts: BundleCounts,
    pub hyperparameters: Hyperparameters,
    /// Inputs longer than `max_seq_len` tokens are truncated by the trainer.
    pub truncation: String,
    pub provenance: serde_json::Value,
}

/// Writes `train.jsonl`, `dev.jsonl`, `test.jsonl` and `manifest.json`
/// into `dir`. Returns the manifest and the hex SHA-256 of its bytes.
pub fn export_finetune_bundle(
    dir: &Path,
    train: ExampleStream<'_>,
    dev: ExampleStream<'_>,
    test: ExampleStream<'_>,
    mode: RationaleMode,
    hyperparameters: Hyperparameters,
    provenance: serde_json::Value,
) -> Result<(BundleManifest, String)> {
    for (name, s) in [("train", &train), ("dev", &dev), ("test", &test)] {
        if s.labels != train.labels {
            return Err(Error::LabelSetMismatch(format!(
                "{name} stream uses a different label set than train"
            )));
        }
        if s.examples.is_empty() {
            return Err(Error::EmptySplit(name.to_string()));
        }
        if let Some(bad) = s.examples.iter().find(|e| !s.labels.contains(&e.label)) {
            return Err(Error::LabelNotInSet(bad.label.clone()));
        }
    }
    let manifest = BundleManifest {
        format_version: BUNDLE_FORMAT_VERSION,
        task: train.labels.task,
        labels: train.labels.labels.clone(),
        majority_label: train.labels.majority_label.clone(),
        mode,
        separator: SEP_TOKEN.to_string(),
        counts: BundleCounts {
            train: train.examples.len(),
            dev: dev.examples.len(),
            test: test.examples.len(),
        },
        hyperparameters,
        truncation: "trainer-policy".to_string(),
        provenance,
    };
    for (name, s) in [("train", &train), ("dev", &dev), ("test", &test)] {
        jsonl::write(&dir.join(format!("{name}.jsonl")), None, s.examples)?;
    }
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    jsonl::write_file(&dir.join("manifest.json"), &bytes)?;
    Ok((manifest, hex::encode(Sha256::digest(&bytes))))
}
