//! Rationale-generation and yes/no probe prompts.
//!
//! A rationale prompt has four parts (task description, instructions,
//! output template, in-context examples) followed by the dialogue being
//! analyzed. Probe prompts ask whether a response exhibits one label.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelSet, Task, Turn};
use crate::error::{Error, Result};
use crate::rationale::{self, Facet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IclExample {
    pub input_block: String,
    pub output_block: String,
}

impl IclExample {
    fn render(&self) -> String {
        format!("{}\n\n{}", self.input_block, self.output_block)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub id: String,
    pub task: Task,
    pub task_description: String,
    pub instructions: String,
    pub output_template: String,
    #[serde(default)]
    pub icl_examples: Vec<IclExample>,
}

const BUILTIN_TEMPLATES: &[(&str, &str)] = &[
    ("erc-v1", include_str!("../assets/templates/erc-v1.json")),
    ("res-v1", include_str!("../assets/templates/res-v1.json")),
];

impl PromptTemplate {
    /// Parses and checks a template asset.
    pub fn from_json(id: &str, json: &str) -> Result<Self> {
        let mut t: PromptTemplate =
            serde_json::from_str(json).map_err(|e| Error::InvalidTemplate(format!("{id}: {e}")))?;
        if t.id.is_empty() {
            t.id = id.to_string();
        }
        for s in [
            &mut t.task_description,
            &mut t.instructions,
            &mut t.output_template,
        ] {
            *s = normalize(s);
        }
        for ex in &mut t.icl_examples {
            ex.input_block = normalize(&ex.input_block);
            ex.output_block = normalize(&ex.output_block);
        }
        t.check()?;
        Ok(t)
    }

    pub fn builtin(id: &str) -> Result<Self> {
        let (_, json) = BUILTIN_TEMPLATES
            .iter()
            .find(|(name, _)| *name == id)
            .ok_or_else(|| Error::InvalidTemplate(format!("no built-in template {id:?}")))?;
        Self::from_json(id, json)
    }

    pub fn builtin_ids() -> impl Iterator<Item = &'static str> {
        BUILTIN_TEMPLATES.iter().map(|(id, _)| *id)
    }

    /// Loads a built-in template by id, or a template file when `spec` is a path.
    pub fn resolve(spec: &str) -> Result<Self> {
        if Self::builtin_ids().any(|id| id == spec) {
            return Self::builtin(spec);
        }
        let path = Path::new(spec);
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string());
        Self::from_json(&id, &json)
    }

    pub fn mode(&self) -> PromptMode {
        match self.task {
            Task::Erc => PromptMode::SingleUtterance,
            Task::Res => PromptMode::PerLine,
        }
    }

    fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidTemplate(format!("{}: {msg}", self.id)));
        for (name, value) in [
            ("task_description", &self.task_description),
            ("instructions", &self.instructions),
            ("output_template", &self.output_template),
        ] {
            if value.trim().is_empty() {
                return fail(format!("empty {name}"));
            }
        }

        let headers = rationale::parse_per_line(&self.output_template, 1);
        if headers.len() != 1 || !headers[0].notes.is_empty() || headers[0].is_empty() {
            return fail("output template must hold exactly one header triple".into());
        }
        for f in Facet::ALL {
            if headers[0].get(f).is_empty() {
                return fail(format!("output template lacks the {f} header"));
            }
        }

        for (i, ex) in self.icl_examples.iter().enumerate() {
            if ex.input_block.trim().is_empty() {
                return fail(format!("icl example {i} has an empty input block"));
            }
            let sets = match self.mode() {
                PromptMode::PerLine => {
                    let n = rationale::parse_per_line(&ex.output_block, 1).len().max(1);
                    rationale::parse_per_line(&ex.output_block, n)
                }
                _ => vec![rationale::parse_single(&ex.output_block)],
            };
            for rs in sets {
                if let Some(f) = Facet::ALL.iter().find(|f| rs.get(**f).is_empty()) {
                    return fail(format!("icl example {i} output lacks the {f} rationale"));
                }
            }
        }
        Ok(())
    }
}

fn normalize(s: &str) -> String {
    s.replace("\r\n", "\n").replace('\r', "\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    /// Rationales for the final utterance only.
    SingleUtterance,
    /// One header triple per dialogue line.
    PerLine,
    /// Yes/no probe for a single label.
    Probe,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub template_id: String,
    #[serde(default)]
    pub refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub target_speaker: String,
    pub mode: PromptMode,
    pub provenance: Provenance,
}

impl RenderedPrompt {
    /// Number of rationale blocks a per-line response should contain.
    pub fn expected_blocks(&self, window_len: usize) -> usize {
        match self.mode {
            PromptMode::PerLine => window_len + 1,
            _ => 1,
        }
    }
}

/// Concatenates the template's in-context examples, one blank line apart.
pub fn render_icl_examples(template: &PromptTemplate) -> String {
    template
        .icl_examples
        .iter()
        .map(IclExample::render)
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Builds the rationale-generation prompt for `target` given its preceding turns.
pub fn build_rationale_prompt(
    template: &PromptTemplate,
    window: &[Turn],
    target: &Turn,
) -> Result<RenderedPrompt> {
    template.check()?;
    if target.text.trim().is_empty() {
        return Err(Error::InvalidInput("target utterance is empty".into()));
    }
    let mut parts = vec![
        template.task_description.clone(),
        template.instructions.clone(),
        template.output_template.clone(),
    ];
    let icl = render_icl_examples(template);
    if !icl.is_empty() {
        parts.push(icl);
    }
    let mut history = String::from("Dialogue history:");
    for turn in window {
        history.push('\n');
        history.push_str(&normalize(&turn.render()));
    }
    parts.push(history);
    parts.push(format!("Final utterance:\n{}", normalize(&target.render())));

    Ok(RenderedPrompt {
        text: parts.join("\n\n"),
        target_speaker: target.speaker.clone(),
        mode: template.mode(),
        provenance: Provenance {
            template_id: template.id.clone(),
            refs: Vec::new(),
        },
    })
}

/// Bracket marker introducing a rationale inside a probe prompt.
pub fn facet_marker(facet: Facet) -> &'static str {
    match facet {
        Facet::Intention => "[INTENTION]",
        Facet::Assumption => "[ASSUMPTION]",
        Facet::Implicit => "[IMPLICIT INFORMATION]",
    }
}

/// One datapoint shown in a probe prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeExample {
    pub context: Vec<Turn>,
    pub response: Turn,
    /// Rationale lines to show, already filtered and ordered by mode.
    pub rationales: Vec<(Facet, String)>,
}

impl ProbeExample {
    fn render(&self, answer: Option<bool>) -> String {
        let mut lines = vec!["[CONTEXT]".to_string()];
        lines.extend(self.context.iter().map(probe_turn));
        lines.push("[RESPONSE]".to_string());
        lines.push(probe_turn(&self.response));
        for (facet, text) in &self.rationales {
            lines.push(format!("{} {}", facet_marker(*facet), normalize(text)));
        }
        lines.push("[OUTPUT]".to_string());
        if let Some(yes) = answer {
            lines.push(if yes { "Yes" } else { "No" }.to_string());
        }
        lines.join("\n")
    }
}

fn probe_turn(t: &Turn) -> String {
    normalize(&format!("[{}]:{}", t.speaker, t.text))
}

/// What a probe asks about.
#[derive(Debug, Clone, Copy)]
pub struct ProbeSpec<'a> {
    pub labels: &'a LabelSet,
    pub domain: &'a str,
    pub label: &'a str,
    pub definition: &'a str,
}

/// Builds a yes/no probe prompt: label description, instructions, shots in
/// the given order, then the query ending in `[OUTPUT]`.
pub fn build_probe_prompt(
    spec: ProbeSpec<'_>,
    shots: &[(ProbeExample, bool)],
    query: &ProbeExample,
) -> Result<RenderedPrompt> {
    if !spec.labels.contains(spec.label) {
        return Err(Error::LabelNotInSet(spec.label.to_string()));
    }
    let noun = spec.labels.task.label_noun();
    let mut parts = vec![
        format!(
            "These examples pertains to the {label} {noun}. For the dataset {domain}, the description of {label} is as follows:\n{definition}",
            label = spec.label,
            domain = spec.domain,
            definition = normalize(spec.definition.trim()),
        ),
        format!(
            "Given a response for a particular speaker and recent dialogue context containing the past utterances (wherever available), output 'Yes' if the utterance contains the above {noun}, otherwise output 'No'. Your output should contain only 'Yes' or 'No', and no other text."
        ),
    ];
    parts.extend(shots.iter().map(|(ex, yes)| ex.render(Some(*yes))));
    parts.push(query.render(None));
    Ok(RenderedPrompt {
        text: parts.join("\n\n"),
        target_speaker: query.response.speaker.clone(),
        mode: PromptMode::Probe,
        provenance: Provenance::default(),
    })
}

/// Label descriptions used in probe prompts, keyed by label name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelDefinitions(pub BTreeMap<String, String>);

impl LabelDefinitions {
    pub fn builtin(task: Task) -> Self {
        let json = match task {
            Task::Erc => include_str!("../assets/definitions/erc.json"),
            Task::Res => include_str!("../assets/definitions/res.json"),
        };
        serde_json::from_str(json).expect("built-in definitions parse")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&json)?)
    }

    pub fn get(&self, label: &str) -> Result<&str> {
        self.0
            .get(label)
            .map(String::as_str)
            .ok_or_else(|| Error::LabelNotInSet(label.to_string()))
    }

    /// Errors unless every label in the set has a definition.
    pub fn covers(&self, labels: &LabelSet) -> Result<()> {
        labels
            .labels
            .iter()
            .try_for_each(|l| self.get(l).map(|_| ()))
    }
}
