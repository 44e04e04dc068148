//! Dialogue corpora: ingestion, context windows and deterministic splits.
//!
//! A corpus file holds one dialogue per line:
//!
//! ```json
//! {"dialogue_id": "d1", "domain": "friends", "turns": [{"speaker": "Ross", "text": "Hi.", "label": "neutral"}]}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default number of preceding turns shown as dialogue context.
pub const DEFAULT_CONTEXT_WIDTH: usize = 5;

/// Default numeric k values for k-shot training splits.
pub const DEFAULT_K_VALUES: [usize; 5] = [5, 10, 20, 50, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    /// Emotion recognition in conversation.
    #[serde(rename = "ERC")]
    Erc,
    /// Resisting-strategy detection.
    #[serde(rename = "RES")]
    Res,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Erc => "ERC",
            Task::Res => "RES",
        }
    }

    /// What a single label is called in probe prompts.
    pub fn label_noun(self) -> &'static str {
        match self {
            Task::Erc => "emotion",
            Task::Res => "strategy",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ERC" => Ok(Task::Erc),
            "RES" => Ok(Task::Res),
            other => Err(Error::InvalidInput(format!("unknown task {other:?}"))),
        }
    }
}

/// The eight classes of a task plus the class used as a fallback prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub task: Task,
    pub labels: Vec<String>,
    pub majority_label: String,
}

impl LabelSet {
    pub const SIZE: usize = 8;

    pub fn new(task: Task, labels: Vec<String>, majority_label: impl Into<String>) -> Result<Self> {
        let majority_label = majority_label.into();
        if labels.len() != Self::SIZE {
            return Err(Error::InvalidInput(format!(
                "a label set needs exactly {} labels, got {}",
                Self::SIZE,
                labels.len()
            )));
        }
        let distinct: HashSet<&str> = labels.iter().map(String::as_str).collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidInput("label set contains duplicates".into()));
        }
        if !distinct.contains(majority_label.as_str()) {
            return Err(Error::LabelNotInSet(majority_label));
        }
        Ok(Self {
            task,
            labels,
            majority_label,
        })
    }

    /// Built-in label inventory for a task. The majority class is listed last.
    pub fn for_task(task: Task) -> Self {
        let (labels, majority): (&[&str], &str) = match task {
            Task::Erc => (
                &[
                    "joy", "sadness", "surprise", "anger", "fear", "disgust", "other", "neutral",
                ],
                "neutral",
            ),
            Task::Res => (
                &[
                    "Source Derogation",
                    "Counter Argument",
                    "Personal Choice",
                    "Information Inquiry",
                    "Self Pity",
                    "Hesitance",
                    "Self-assertion",
                    "Not a resistance strategy",
                ],
                "Not a resistance strategy",
            ),
        };
        Self::new(
            task,
            labels.iter().map(|s| s.to_string()).collect(),
            majority,
        )
        .expect("built-in label sets are well formed")
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: String,
    pub text: String,
    #[serde(default)]
    pub label: Option<String>,
}

impl Turn {
    pub fn new(speaker: impl Into<String>, text: impl Into<String>, label: Option<&str>) -> Self {
        Self {
            speaker: speaker.into(),
            text: text.into(),
            label: label.map(str::to_string),
        }
    }

    /// `Speaker: text`, the serialization used in prompts and classifier inputs.
    pub fn render(&self) -> String {
        format!("{}: {}", self.speaker, self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub dialogue_id: String,
    pub domain: String,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    fn check(&self, labels: &LabelSet) -> Result<()> {
        let invalid = |reason: String| Error::InvalidDialogue {
            dialogue_id: self.dialogue_id.clone(),
            reason,
        };
        if self.dialogue_id.trim().is_empty() {
            return Err(invalid("empty dialogue_id".into()));
        }
        if self.turns.is_empty() {
            return Err(invalid("no turns".into()));
        }
        for (i, turn) in self.turns.iter().enumerate() {
            if turn.speaker.trim().is_empty() {
                return Err(invalid(format!("turn {i} has an empty speaker")));
            }
            if turn.text.trim().is_empty() {
                return Err(invalid(format!("turn {i} has empty text")));
            }
            if let Some(label) = &turn.label {
                if !labels.contains(label) {
                    return Err(Error::UnknownLabel {
                        label: label.clone(),
                        dialogue_id: self.dialogue_id.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Points at one labeled turn.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExampleRef {
    pub dialogue_id: String,
    pub turn_index: usize,
}

impl ExampleRef {
    pub fn new(dialogue_id: impl Into<String>, turn_index: usize) -> Self {
        Self {
            dialogue_id: dialogue_id.into(),
            turn_index,
        }
    }

    /// `dialogue_id#turn_index`
    pub fn example_id(&self) -> String {
        format!("{}#{}", self.dialogue_id, self.turn_index)
    }
}

/// A loaded, validated corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub labels: LabelSet,
    pub dialogues: Vec<Dialogue>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(labels: LabelSet, dialogues: Vec<Dialogue>) -> Result<Self> {
        let mut index = HashMap::with_capacity(dialogues.len());
        for (i, d) in dialogues.iter().enumerate() {
            d.check(&labels)?;
            if index.insert(d.dialogue_id.clone(), i).is_some() {
                return Err(Error::DuplicateDialogue(d.dialogue_id.clone()));
            }
        }
        Ok(Self {
            labels,
            dialogues,
            index,
        })
    }

    pub fn dialogue(&self, dialogue_id: &str) -> Option<&Dialogue> {
        self.index.get(dialogue_id).map(|&i| &self.dialogues[i])
    }

    pub fn turn_count(&self) -> usize {
        self.dialogues.iter().map(|d| d.turns.len()).sum()
    }

    /// Resolves a reference to its dialogue and labeled turn.
    pub fn resolve(&self, r: &ExampleRef) -> Result<(&Dialogue, &Turn)> {
        let d = self
            .dialogue(&r.dialogue_id)
            .ok_or_else(|| Error::InvalidInput(format!("unknown dialogue {}", r.dialogue_id)))?;
        let turn = d
            .turns
            .get(r.turn_index)
            .ok_or_else(|| Error::TurnOutOfRange {
                dialogue_id: d.dialogue_id.clone(),
                index: r.turn_index,
                len: d.turns.len(),
            })?;
        if turn.label.is_none() {
            return Err(Error::InvalidInput(format!(
                "{} refers to an unlabeled turn",
                r.example_id()
            )));
        }
        Ok((d, turn))
    }

    /// Every labeled turn in corpus order, optionally restricted to a set of dialogues.
    pub fn labeled_refs(&self, only: Option<&BTreeSet<String>>) -> Vec<ExampleRef> {
        self.dialogues
            .iter()
            .filter(|d| only.is_none_or(|ids| ids.contains(&d.dialogue_id)))
            .flat_map(|d| {
                d.turns
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.label.is_some())
                    .map(move |(i, _)| ExampleRef::new(d.dialogue_id.clone(), i))
            })
            .collect()
    }

    /// A corpus holding only the given dialogues, in original order.
    pub fn subset(&self, ids: &BTreeSet<String>) -> Corpus {
        let dialogues: Vec<Dialogue> = self
            .dialogues
            .iter()
            .filter(|d| ids.contains(&d.dialogue_id))
            .cloned()
            .collect();
        Corpus::new(self.labels.clone(), dialogues).expect("subset of a valid corpus is valid")
    }
}

/// Reads a corpus JSONL file and validates it against the task's label set.
pub fn load_corpus(path: impl AsRef<Path>, task: Task) -> Result<Corpus> {
    load_corpus_with_labels(path, LabelSet::for_task(task))
}

pub fn load_corpus_with_labels(path: impl AsRef<Path>, labels: LabelSet) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dialogues = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let dialogue: Dialogue =
            serde_json::from_str(&line).map_err(|source| Error::MalformedLine {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?;
        dialogues.push(dialogue);
    }
    Corpus::new(labels, dialogues)
}

/// Serializes dialogues back to the JSONL interchange format.
pub fn write_corpus(dialogues: &[Dialogue]) -> String {
    let mut out = String::new();
    for d in dialogues {
        out.push_str(&serde_json::to_string(d).expect("dialogues serialize"));
        out.push('\n');
    }
    out
}

/// The up-to-`width` turns immediately preceding `turn_index`.
pub fn context_window(dialogue: &Dialogue, turn_index: usize, width: usize) -> Result<&[Turn]> {
    if turn_index >= dialogue.turns.len() {
        return Err(Error::TurnOutOfRange {
            dialogue_id: dialogue.dialogue_id.clone(),
            index: turn_index,
            len: dialogue.turns.len(),
        });
    }
    let start = turn_index.saturating_sub(width);
    Ok(&dialogue.turns[start..turn_index])
}

/// Number of examples per label in a k-shot split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KShot {
    Count(usize),
    All,
}

impl fmt::Display for KShot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KShot::Count(k) => write!(f, "{k}"),
            KShot::All => f.write_str("all"),
        }
    }
}

impl std::str::FromStr for KShot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(KShot::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(KShot::Count(k)),
            _ => Err(Error::InvalidSplit(format!(
                "k must be a positive integer or \"all\", got {s:?}"
            ))),
        }
    }
}

impl Serialize for KShot {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KShot::Count(k) => s.serialize_u64(*k as u64),
            KShot::All => s.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for KShot {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(serde::de::Error::custom("k must be at least 1")),
            Raw::Num(k) => Ok(KShot::Count(k as usize)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Describes how samples relate across seeds; stored with every split.
pub const RESAMPLING_POLICY: &str = "redrawn-per-seed";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KShotSplit {
    pub k: KShot,
    pub seed: u64,
    pub selected: BTreeMap<String, Vec<ExampleRef>>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default = "default_policy")]
    pub resampling: String,
}

fn default_policy() -> String {
    RESAMPLING_POLICY.to_string()
}

impl KShotSplit {
    /// All selected references, label by label in label-set order.
    pub fn refs<'a>(&'a self, labels: &'a LabelSet) -> impl Iterator<Item = &'a ExampleRef> + 'a {
        labels
            .labels
            .iter()
            .filter_map(|l| self.selected.get(l))
            .flatten()
    }

    pub fn len(&self) -> usize {
        self.selected.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Samples up to `k` labeled turns per label without replacement.
///
/// Labels are visited in label-set order and share one generator seeded by
/// `seed`, so the split is a pure function of `(corpus, k, seed)`. A label
/// with fewer than `k` examples contributes all of them; a label with none
/// yields an empty list and a warning.
pub fn make_kshot_split(corpus: &Corpus, k: KShot, seed: u64) -> Result<KShotSplit> {
    if k == KShot::Count(0) {
        return Err(Error::InvalidSplit("k must be at least 1".into()));
    }
    let mut by_label: HashMap<&str, Vec<ExampleRef>> = HashMap::new();
    for r in corpus.labeled_refs(None) {
        let (_, turn) = corpus.resolve(&r)?;
        let label = turn
            .label
            .as_deref()
            .expect("labeled_refs yields labeled turns");
        let key = corpus.labels.labels.iter().find(|l| *l == label).unwrap();
        by_label.entry(key.as_str()).or_default().push(r);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected = BTreeMap::new();
    let mut warnings = Vec::new();
    for label in &corpus.labels.labels {
        let pool = by_label.remove(label.as_str()).unwrap_or_default();
        if pool.is_empty() {
            warnings.push(format!("label {label:?} has no examples"));
        }
        let picked = match k {
            KShot::Count(n) if n < pool.len() => rand::seq::index::sample(&mut rng, pool.len(), n)
                .into_iter()
                .map(|i| pool[i].clone())
                .collect(),
            _ => pool,
        };
        selected.insert(label.clone(), picked);
    }
    Ok(KShotSplit {
        k,
        seed,
        selected,
        warnings,
        resampling: RESAMPLING_POLICY.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
        }
    }
}

/// Dialogue ids assigned to each partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub seed: u64,
    pub train: BTreeSet<String>,
    pub dev: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

/// Splits a corpus into train/dev/test at dialogue granularity.
///
/// Dev and test sizes are `floor(n * ratio)` (at least one each); the
/// remainder goes to train.
pub fn split_corpus(corpus: &Corpus, ratios: SplitRatios, seed: u64) -> Result<Partition> {
    let SplitRatios { train, dev, test } = ratios;
    if !(train > 0.0 && dev > 0.0 && test > 0.0) {
        return Err(Error::InvalidSplit("ratios must be positive".into()));
    }
    if ((train + dev + test) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSplit(format!(
            "ratios must sum to 1, got {}",
            train + dev + test
        )));
    }
    let n = corpus.dialogues.len();
    if n < 3 {
        return Err(Error::InvalidSplit(format!(
            "{n} dialogues cannot fill three splits"
        )));
    }
    let take = |r: f64| ((n as f64 * r + 1e-9).floor() as usize).max(1);
    let n_dev = take(dev);
    let n_test = take(test);
    if n_dev + n_test >= n {
        return Err(Error::InvalidSplit(format!(
            "{n} dialogues leave no training dialogue at ratios {train}/{dev}/{test}"
        )));
    }

    let mut ids: Vec<&String> = corpus.dialogues.iter().map(|d| &d.dialogue_id).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = n - n_dev - n_test;
    let collect = |s: &[&String]| s.iter().map(|id| (*id).clone()).collect::<BTreeSet<_>>();
    Ok(Partition {
        seed,
        train: collect(&ids[..n_train]),
        dev: collect(&ids[n_train..n_train + n_dev]),
        test: collect(&ids[n_train + n_dev..]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dialogue(id: &str, n: usize) -> Dialogue {
        Dialogue {
            dialogue_id: id.into(),
            domain: "test".into(),
            turns: (0..n)
                .map(|i| {
                    Turn::new(
                        if i % 2 == 0 { "A" } else { "B" },
                        format!("t{i}"),
                        Some("joy"),
                    )
                })
                .collect(),
        }
    }

    fn erc_corpus(dialogues: Vec<Dialogue>) -> Corpus {
        Corpus::new(LabelSet::for_task(Task::Erc), dialogues).unwrap()
    }

    #[test]
    fn label_sets_have_eight_labels_and_member_majority() {
        for task in [Task::Erc, Task::Res] {
            let ls = LabelSet::for_task(task);
            assert_eq!(ls.len(), 8);
            assert!(ls.contains(&ls.majority_label));
        }
        assert_eq!(LabelSet::for_task(Task::Erc).majority_label, "neutral");
        assert_eq!(
            LabelSet::for_task(Task::Res).majority_label,
            "Not a resistance strategy"
        );
    }

    #[test]
    fn label_set_rejects_bad_shapes() {
        let seven: Vec<String> = (0..7).map(|i| format!("l{i}")).collect();
        assert!(LabelSet::new(Task::Erc, seven, "l0").is_err());
        let eight: Vec<String> = (0..8).map(|i| format!("l{i}")).collect();
        assert!(matches!(
            LabelSet::new(Task::Erc, eight, "zz"),
            Err(Error::LabelNotInSet(_))
        ));
    }

    #[test]
    fn load_round_trips_a_single_dialogue() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, write_corpus(&[dialogue("d1", 3)])).unwrap();
        let c = load_corpus(&path, Task::Erc).unwrap();
        assert_eq!(c.dialogues.len(), 1);
        assert_eq!(c.labeled_refs(None).len(), 3);
        assert_eq!(c.dialogues[0].turns[2].text, "t2");
    }

    #[test]
    fn load_rejects_unknown_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(
            &path,
            r#"{"dialogue_id":"d9","domain":"x","turns":[{"speaker":"A","text":"hey","label":"joyy"}]}"#,
        )
        .unwrap();
        let err = load_corpus(&path, Task::Erc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown label"), "{msg}");
        assert!(msg.contains("joyy") && msg.contains("d9"), "{msg}");
    }

    #[test]
    fn load_reports_line_number_of_malformed_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let good = write_corpus(&[dialogue("d1", 1)]);
        std::fs::write(&path, format!("{good}{{not json\n")).unwrap();
        match load_corpus(&path, Task::Erc) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed line error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_duplicates_and_empty_text() {
        assert!(matches!(
            Corpus::new(
                LabelSet::for_task(Task::Erc),
                vec![dialogue("d1", 1), dialogue("d1", 2)]
            ),
            Err(Error::DuplicateDialogue(_))
        ));
        let mut d = dialogue("d2", 2);
        d.turns[1].text = "   ".into();
        assert!(Corpus::new(LabelSet::for_task(Task::Erc), vec![d]).is_err());
    }

    #[test]
    fn context_window_cases() {
        let d = dialogue("d", 12);
        assert!(context_window(&d, 0, 5).unwrap().is_empty());
        let w = context_window(&d, 3, 5).unwrap();
        assert_eq!(
            w.iter().map(|t| t.text.as_str()).collect::<Vec<_>>(),
            ["t0", "t1", "t2"]
        );
        let w = context_window(&d, 9, 5).unwrap();
        assert_eq!(
            w.iter().map(|t| t.text.as_str()).collect::<Vec<_>>(),
            ["t4", "t5", "t6", "t7", "t8"]
        );
        assert!(context_window(&d, 0, 0).unwrap().is_empty());
        assert!(matches!(
            context_window(&d, 12, 5),
            Err(Error::TurnOutOfRange { .. })
        ));
    }

    #[test]
    fn kshot_all_takes_everything() {
        let c = erc_corpus(vec![dialogue("a", 4), dialogue("b", 3)]);
        let s = make_kshot_split(&c, KShot::All, 1).unwrap();
        assert_eq!(s.selected["joy"].len(), 7);
        assert!(s.selected["neutral"].is_empty());
        assert_eq!(s.warnings.len(), 7);
    }

    #[test]
    fn kshot_shortfall_takes_all_available() {
        let c = erc_corpus(vec![dialogue("a", 3)]);
        let s = make_kshot_split(&c, KShot::Count(5), 3).unwrap();
        assert_eq!(s.selected["joy"].len(), 3);
    }

    #[test]
    fn kshot_json_is_byte_stable() {
        let c = erc_corpus(vec![dialogue("a", 9), dialogue("b", 9)]);
        let a = serde_json::to_string(&make_kshot_split(&c, KShot::Count(5), 7).unwrap()).unwrap();
        let b = serde_json::to_string(&make_kshot_split(&c, KShot::Count(5), 7).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(r#"{"k":5,"seed":7,"selected":{"#), "{a}");
    }

    #[test]
    fn kshot_value_parsing() {
        assert_eq!("all".parse::<KShot>().unwrap(), KShot::All);
        assert_eq!("20".parse::<KShot>().unwrap(), KShot::Count(20));
        assert!("0".parse::<KShot>().is_err());
        assert!(serde_json::from_str::<KShot>("0").is_err());
        assert_eq!(
            serde_json::from_str::<KShot>("\"all\"").unwrap(),
            KShot::All
        );
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let c = erc_corpus((0..10).map(|i| dialogue(&format!("d{i}"), 1)).collect());
        let p = split_corpus(&c, SplitRatios::default(), 0).unwrap();
        assert_eq!((p.train.len(), p.dev.len(), p.test.len()), (8, 1, 1));
        assert!(
            p.train.is_disjoint(&p.dev)
                && p.train.is_disjoint(&p.test)
                && p.dev.is_disjoint(&p.test)
        );
        assert_eq!(p, split_corpus(&c, SplitRatios::default(), 0).unwrap());
    }

    #[test]
    fn split_rejects_bad_inputs() {
        let c = erc_corpus((0..10).map(|i| dialogue(&format!("d{i}"), 1)).collect());
        let r = SplitRatios {
            train: 0.7,
            dev: 0.1,
            test: 0.1,
        };
        assert!(matches!(
            split_corpus(&c, r, 0),
            Err(Error::InvalidSplit(_))
        ));
        let small = erc_corpus(vec![dialogue("a", 1), dialogue("b", 1)]);
        assert!(split_corpus(&small, SplitRatios::default(), 0).is_err());
    }
}
