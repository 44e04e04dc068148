//! Parsing of generated rationales and the validity rules applied to them.
//!
//! Two header dialects are recognized: the single-utterance form
//! (`Speaker's Intention in the final utterance:`) and the bare per-line form
//! (`Speaker's Intention:`). Matching is case-insensitive and tolerates a
//! leading list marker (`a)`, `1.`, `-`, `*`) and markdown bold around the
//! header. Nothing else is rescued.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Facet {
    Intention,
    Assumption,
    Implicit,
}

impl Facet {
    pub const ALL: [Facet; 3] = [Facet::Intention, Facet::Assumption, Facet::Implicit];

    /// Header text without the `in the final utterance` suffix.
    pub fn header(self) -> &'static str {
        match self {
            Facet::Intention => "Speaker's Intention",
            Facet::Assumption => "Assumptions about the conversation",
            Facet::Implicit => "Implicit Information",
        }
    }

    fn from_header(h: &str) -> Facet {
        let h = h.to_ascii_lowercase();
        if h.starts_with("speaker") {
            Facet::Intention
        } else if h.starts_with("assumption") {
            Facet::Assumption
        } else {
            Facet::Implicit
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Facet::Intention => "intention",
            Facet::Assumption => "assumption",
            Facet::Implicit => "implicit",
        })
    }
}

/// Header style used when rendering a rationale set back to text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderDialect {
    /// `Speaker's Intention in the final utterance: ...`
    FinalUtterance,
    /// `Speaker's Intention: ...`
    Bare,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationaleSet {
    pub intention: String,
    pub assumption: String,
    pub implicit: String,
    #[serde(default)]
    pub raw: String,
    #[serde(default)]
    pub source_key: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RationaleSet {
    pub fn new(intention: &str, assumption: &str, implicit: &str) -> Self {
        Self {
            intention: intention.to_string(),
            assumption: assumption.to_string(),
            implicit: implicit.to_string(),
            ..Self::default()
        }
    }

    pub fn get(&self, facet: Facet) -> &str {
        match facet {
            Facet::Intention => &self.intention,
            Facet::Assumption => &self.assumption,
            Facet::Implicit => &self.implicit,
        }
    }

    fn slot(&mut self, facet: Facet) -> &mut String {
        match facet {
            Facet::Intention => &mut self.intention,
            Facet::Assumption => &mut self.assumption,
            Facet::Implicit => &mut self.implicit,
        }
    }

    pub fn is_empty(&self) -> bool {
        Facet::ALL.iter().all(|f| self.get(*f).is_empty())
    }

    pub fn with_source_key(mut self, key: impl Into<String>) -> Self {
        self.source_key = key.into();
        self
    }

    /// Renders the three fields in the output-template layout.
    pub fn render(&self, dialect: HeaderDialect) -> String {
        Facet::ALL
            .iter()
            .map(|f| match dialect {
                HeaderDialect::FinalUtterance => {
                    format!("{} in the final utterance: {}", f.header(), self.get(*f))
                }
                HeaderDialect::Bare => format!("{}: {}", f.header(), self.get(*f)),
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn header_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(concat!(
            r"(?im)^[ \t]*",
            r"(?:(?:\d{1,3}|[a-z])[.)][ \t]*|[-*][ \t]+)?",
            r"(?:\*\*|__)?[ \t]*",
            r"(?P<h>speaker(?:'|’)?s[ \t]+intention",
            r"|assumptions?[ \t]+about[ \t]+the[ \t]+conversation",
            r"|implicit[ \t]+information)",
            r"(?:[ \t]+in[ \t]+the[ \t]+final[ \t]+utterance)?",
            r"[ \t]*(?:\*\*|__)?[ \t]*:[ \t]*(?:\*\*|__)?",
        ))
        .expect("header regex compiles")
    })
}

struct HeaderHit {
    facet: Facet,
    start: usize,
    end: usize,
}

fn header_hits(text: &str) -> Vec<HeaderHit> {
    header_regex()
        .captures_iter(text)
        .map(|c| {
            let m = c.get(0).unwrap();
            HeaderHit {
                facet: Facet::from_header(&c["h"]),
                start: m.start(),
                end: m.end(),
            }
        })
        .collect()
}

/// Text following header `i` up to the next header or end of input.
fn value_after(text: &str, hits: &[HeaderHit], i: usize) -> String {
    let stop = hits.get(i + 1).map_or(text.len(), |h| h.start);
    text[hits[i].end..stop].trim().to_string()
}

/// Extracts one rationale set from a response. Never fails: anything that
/// does not match degrades to empty fields. When a header repeats, its
/// first occurrence wins.
pub fn parse_single(response: &str) -> RationaleSet {
    let text = normalize_newlines(response);
    let hits = header_hits(&text);
    let mut rs = RationaleSet {
        raw: response.to_string(),
        ..RationaleSet::default()
    };
    let mut seen = [false; 3];
    for (i, hit) in hits.iter().enumerate() {
        let slot = hit.facet as usize;
        if !seen[slot] {
            seen[slot] = true;
            *rs.slot(hit.facet) = value_after(&text, &hits, i);
        }
    }
    rs
}

/// Splits a response into consecutive header triples, one per dialogue
/// line, and returns exactly `expected_blocks` sets.
///
/// A new block starts whenever a header repeats a facet already present in
/// the current block. Missing blocks are padded with empty sets; surplus
/// blocks are dropped. Both cases leave a note on the affected entries.
pub fn parse_per_line(response: &str, expected_blocks: usize) -> Vec<RationaleSet> {
    let expected_blocks = expected_blocks.max(1);
    let text = normalize_newlines(response);
    let hits = header_hits(&text);

    let mut blocks: Vec<(usize, RationaleSet, [bool; 3])> = Vec::new();
    for (i, hit) in hits.iter().enumerate() {
        let slot = hit.facet as usize;
        let fresh = blocks.last().is_none_or(|(_, _, seen)| seen[slot]);
        if fresh {
            blocks.push((hit.start, RationaleSet::default(), [false; 3]));
        }
        let (_, rs, seen) = blocks.last_mut().unwrap();
        seen[slot] = true;
        *rs.slot(hit.facet) = value_after(&text, &hits, i);
    }

    let starts: Vec<usize> = blocks.iter().map(|b| b.0).collect();
    let parsed = blocks.len();
    let mut out: Vec<RationaleSet> = blocks
        .into_iter()
        .enumerate()
        .map(|(i, (start, mut rs, _))| {
            let stop = starts.get(i + 1).copied().unwrap_or(text.len());
            rs.raw = text[start..stop].trim_end().to_string();
            rs
        })
        .collect();

    if parsed > expected_blocks {
        out.truncate(expected_blocks);
        let note = format!("truncated: parsed {parsed} blocks, expected {expected_blocks}");
        for rs in &mut out {
            rs.notes.push(note.clone());
        }
    } else if parsed < expected_blocks {
        let note = format!("padded: parsed {parsed} blocks, expected {expected_blocks}");
        while out.len() < expected_blocks {
            out.push(RationaleSet {
                notes: vec![note.clone()],
                ..RationaleSet::default()
            });
        }
    }
    out
}

fn normalize_newlines(s: &str) -> String {
    s.replace("\r\n", "\n").replace('\r', "\n")
}

/// Which fields the speaker-subject rule inspects.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectScope {
    #[default]
    Intention,
    AnyField,
}

/// Validity configuration: subject scope plus per-corpus speaker aliases
/// (e.g. a speaker name mapped to the role `Persuadee`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityRules {
    #[serde(default)]
    pub subject_scope: SubjectScope,
    #[serde(default)]
    pub aliases: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub non_null: bool,
    pub speaker_subject: bool,
    pub all_three_present: bool,
    pub valid: bool,
    pub failure_notes: Vec<String>,
}

impl ValidityReport {
    /// All three fields were extracted but the subject rule failed.
    pub fn is_rule_failure(&self) -> bool {
        self.all_three_present && !self.speaker_subject
    }

    pub fn is_parse_failure(&self) -> bool {
        !self.all_three_present
    }
}

impl ValidityRules {
    pub fn validate(&self, rs: &RationaleSet, target_speaker: &str) -> ValidityReport {
        let mut notes = rs.notes.clone();
        let non_null = !rs.is_empty();
        if !non_null {
            notes.push("no rationale text".to_string());
        }
        for f in Facet::ALL {
            if non_null && rs.get(f).is_empty() {
                notes.push(format!("missing {f}"));
            }
        }
        let all_three_present = Facet::ALL.iter().all(|f| !rs.get(*f).is_empty());

        let mut names = vec![target_speaker.to_lowercase()];
        if let Some(aliases) = self.aliases.get(target_speaker) {
            names.extend(aliases.iter().map(|a| a.to_lowercase()));
        }
        names.retain(|n| !n.trim().is_empty());
        let fields: Vec<String> = match self.subject_scope {
            SubjectScope::Intention => vec![rs.intention.to_lowercase()],
            SubjectScope::AnyField => Facet::ALL
                .iter()
                .map(|f| rs.get(*f).to_lowercase())
                .collect(),
        };
        let speaker_subject = fields
            .iter()
            .any(|field| names.iter().any(|n| field.contains(n.as_str())));
        if non_null && !speaker_subject {
            notes.push(format!("speaker {target_speaker:?} is not the subject"));
        }

        ValidityReport {
            non_null,
            speaker_subject,
            all_three_present,
            valid: non_null && speaker_subject && all_three_present,
            failure_notes: notes,
        }
    }
}

/// Validates with default rules: intention field only, no aliases.
pub fn validate(rs: &RationaleSet, target_speaker: &str) -> ValidityReport {
    ValidityRules::default().validate(rs, target_speaker)
}

/// Fraction of valid reports.
pub fn validity_rate(reports: &[ValidityReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::InvalidInput(
            "validity rate of an empty collection".into(),
        ));
    }
    Ok(reports.iter().filter(|r| r.valid).count() as f64 / reports.len() as f64)
}

/// Validity counts with parse and rule failures kept apart.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValiditySummary {
    pub total: usize,
    pub valid: usize,
    pub parse_failures: usize,
    pub rule_failures: usize,
    pub rate: f64,
}

impl ValiditySummary {
    pub fn from_reports(reports: &[ValidityReport]) -> Self {
        let total = reports.len();
        let valid = reports.iter().filter(|r| r.valid).count();
        Self {
            total,
            valid,
            parse_failures: reports.iter().filter(|r| r.is_parse_failure()).count(),
            rule_failures: reports.iter().filter(|r| r.is_rule_failure()).count(),
            rate: if total == 0 {
                0.0
            } else {
                valid as f64 / total as f64
            },
        }
    }
}

/// One line of the parsed rationale store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationaleRecord {
    pub dialogue_id: String,
    pub turn_index: usize,
    pub intention: String,
    pub assumption: String,
    pub implicit: String,
    pub valid: bool,
    pub failure_notes: Vec<String>,
    pub source_key: String,
}

impl RationaleRecord {
    pub fn new(
        dialogue_id: &str,
        turn_index: usize,
        rs: &RationaleSet,
        report: &ValidityReport,
    ) -> Self {
        Self {
            dialogue_id: dialogue_id.to_string(),
            turn_index,
            intention: rs.intention.clone(),
            assumption: rs.assumption.clone(),
            implicit: rs.implicit.clone(),
            valid: report.valid,
            failure_notes: report.failure_notes.clone(),
            source_key: rs.source_key.clone(),
        }
    }

    pub fn rationale_set(&self) -> RationaleSet {
        RationaleSet {
            intention: self.intention.clone(),
            assumption: self.assumption.clone(),
            implicit: self.implicit.clone(),
            raw: String::new(),
            source_key: self.source_key.clone(),
            notes: Vec::new(),
        }
    }
}

/// Parsed rationales keyed by `(dialogue_id, turn_index)`.
#[derive(Debug, Clone, Default)]
pub struct RationaleStore {
    records: std::collections::HashMap<(String, usize), RationaleRecord>,
}

impl RationaleStore {
    pub fn new(records: impl IntoIterator<Item = RationaleRecord>) -> Self {
        Self {
            records: records
                .into_iter()
                .map(|r| ((r.dialogue_id.clone(), r.turn_index), r))
                .collect(),
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let (_, records) = crate::jsonl::read::<RationaleRecord>(path)?;
        Ok(Self::new(records))
    }

    pub fn get(&self, dialogue_id: &str, turn_index: usize) -> Option<&RationaleRecord> {
        self.records.get(&(dialogue_id.to_string(), turn_index))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
