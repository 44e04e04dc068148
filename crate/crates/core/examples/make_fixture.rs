//! Regenerates the shipped ERC fixture: a synthetic corpus, its run config,
//! and a response cache recorded from a deterministic stand-in model.
//!
//! Usage: cargo run -p rationale-core --example make_fixture [fixture_dir]
//!
//! The stand-in model reads emotion keywords from the final utterance and
//! answers probes with seeded noise that is lower when the prompt carries a
//! rationale, so rationale modes score measurably differently from NONE.

use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rationale_core::corpus::{write_corpus, Dialogue, Turn};
use rationale_core::gateway::{ChatRequest, ChatResponse, GatewayMode, Transport, TransportError};
use rationale_core::pipeline::{Overrides, RunConfig, RunContext};
use sha2::{Digest, Sha256};

const KEY_ENV: &str = "FIXTURE_MODEL_KEY";

/// (label, keyword in the utterance, hint word the model uses in rationales)
const LEXICON: [(&str, &str, &str); 8] = [
    ("joy", "delighted", "cheerful"),
    ("sadness", "miserable", "downcast"),
    ("surprise", "astonished", "startled"),
    ("anger", "furious", "irritated"),
    ("fear", "terrified", "anxious"),
    ("disgust", "revolting", "repulsed"),
    ("other", "whatever", "indifferent"),
    ("neutral", "", "composed"),
];

const SPEAKERS: [(&str, &str); 5] = [
    ("Ana", "Ben"),
    ("Chloe", "Dev"),
    ("Eli", "Farah"),
    ("Gus", "Hana"),
    ("Ivo", "Jun"),
];

const TOPICS: [&str; 10] = [
    "the new apartment",
    "the job interview",
    "the weekend trip",
    "the leftover lasagna",
    "your brother's visit",
    "the broken heater",
    "the concert tickets",
    "the exam results",
    "the neighbour's dog",
    "the wedding plans",
];

fn utterance(label: &str, topic: &str, variant: usize) -> String {
    match (label, variant % 2) {
        ("joy", 0) => format!("I am honestly delighted about {topic}!"),
        ("joy", _) => format!("You have no idea how delighted I am, {topic} worked out."),
        ("sadness", 0) => format!("I feel miserable about {topic}."),
        ("sadness", _) => format!("It has been a miserable week with {topic}."),
        ("surprise", 0) => format!("Wait, I am astonished, {topic} happened already?"),
        ("surprise", _) => format!("I was astonished when I heard about {topic}."),
        ("anger", 0) => format!("I am furious about {topic}."),
        ("anger", _) => format!("Do not even start, I am still furious over {topic}."),
        ("fear", 0) => format!("I am terrified of what {topic} means for us."),
        ("fear", _) => format!("Honestly {topic} has me terrified."),
        ("disgust", 0) => format!("Ugh, {topic} is revolting."),
        ("disgust", _) => format!("That whole thing with {topic} was revolting."),
        ("other", 0) => format!("Whatever, {topic} is not my problem."),
        ("other", _) => format!("Fine, whatever you decide about {topic}."),
        (_, 0) => format!("We should talk about {topic} later."),
        _ => format!("Did you check on {topic} yet?"),
    }
}

fn corpus() -> Vec<Dialogue> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // Neutral appears about three times as often as each other label.
    let weights = [2, 2, 2, 2, 2, 2, 2, 6];
    let total: u32 = weights.iter().sum();
    (0..20)
        .map(|d| {
            let (a, b) = SPEAKERS[d % SPEAKERS.len()];
            let turns = (0..7)
                .map(|t| {
                    let mut x = rng.gen_range(0..total);
                    let li = weights
                        .iter()
                        .position(|&w| {
                            if x < w {
                                true
                            } else {
                                x -= w;
                                false
                            }
                        })
                        .unwrap();
                    let label = LEXICON[li].0;
                    let topic = TOPICS[rng.gen_range(0..TOPICS.len())];
                    Turn {
                        speaker: if t % 2 == 0 { a } else { b }.to_string(),
                        text: utterance(label, topic, rng.gen_range(0..2)),
                        label: Some(label.to_string()),
                    }
                })
                .collect();
            Dialogue {
                dialogue_id: format!("syn-{d:02}"),
                domain: "synthetic-friends".to_string(),
                turns,
            }
        })
        .collect()
}

fn digest(text: &str) -> u64 {
    let h = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(h[..8].try_into().unwrap())
}

fn keyword_label(text: &str) -> &'static str {
    let lower = text.to_lowercase();
    LEXICON
        .iter()
        .find(|(_, kw, _)| !kw.is_empty() && lower.contains(kw))
        .map_or("neutral", |(l, _, _)| l)
}

struct StandIn;

impl StandIn {
    fn rationale(&self, prompt: &str) -> String {
        let last = prompt
            .rsplit("Final utterance:\n")
            .next()
            .unwrap_or("")
            .trim();
        let (speaker, text) = last.split_once(": ").unwrap_or(("Someone", last));
        let label = keyword_label(text);
        let hint = LEXICON.iter().find(|(l, _, _)| *l == label).unwrap().2;
        let h = digest(prompt);
        let int = format!(
            "{speaker} wants the other person to know how they feel about what was just said."
        );
        let asm = format!("{speaker} assumes the listener knows the situation being discussed.");
        let imp = format!("{speaker} comes across as {hint} in this moment.");
        match h % 12 {
            // Drops the assumption field.
            0 => format!(
                "Speaker's Intention in the final utterance: {int}\nImplicit Information in the final utterance: {imp}"
            ),
            // Intention does not name the speaker.
            1 => format!(
                "Speaker's Intention in the final utterance: The speaker is reacting to the conversation.\nAssumptions about the conversation in the final utterance: {asm}\nImplicit Information in the final utterance: {imp}"
            ),
            2 => format!(
                "**Speaker's Intention in the final utterance:** {int}\n\n**Assumptions about the conversation in the final utterance:** {asm}\n\n**Implicit Information in the final utterance:** {imp}"
            ),
            3 => format!(
                "a) Speaker's Intention: {int}\nb) Assumptions about the conversation: {asm}\nc) Implicit Information: {imp}"
            ),
            _ => format!(
                "Speaker's Intention in the final utterance: {int}\n\nAssumptions about the conversation in the final utterance: {asm}\n\nImplicit Information in the final utterance: {imp}"
            ),
        }
    }

    fn probe(&self, prompt: &str) -> String {
        let label = prompt
            .strip_prefix("These examples pertains to the ")
            .and_then(|s| s.split_once(" emotion."))
            .map_or("", |(l, _)| l);
        let query = prompt.rsplit("\n\n").next().unwrap_or("");
        let response = query
            .split_once("[RESPONSE]\n")
            .and_then(|(_, rest)| rest.lines().next())
            .unwrap_or("");
        let implicit = query
            .lines()
            .find_map(|l| l.strip_prefix("[IMPLICIT INFORMATION] "));
        let h = digest(prompt) % 100;
        let (truth, noise) = match implicit {
            Some(imp) => {
                let hint = LEXICON
                    .iter()
                    .find(|(l, _, _)| *l == label)
                    .map_or("", |e| e.2);
                (!hint.is_empty() && imp.contains(hint), 4)
            }
            None => (keyword_label(response) == label, 22),
        };
        let answer = if h < noise { !truth } else { truth };
        match (answer, h % 7) {
            (true, 0) => "Yes.".to_string(),
            (true, _) => "Yes".to_string(),
            (false, 0) => "no".to_string(),
            (false, _) => "No".to_string(),
        }
    }
}

impl Transport for StandIn {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let text = if request.prompt.starts_with("These examples pertains") {
            self.probe(&request.prompt)
        } else {
            self.rationale(&request.prompt)
        };
        Ok(ChatResponse::stop(text))
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/erc"));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("corpus.jsonl"), write_corpus(&corpus()))?;
    let config = serde_json::json!({
        "task": "ERC",
        "corpus": ["corpus.jsonl"],
        "template": "erc-v1",
        "context_width": 5,
        "modes": ["NONE", "ALL"],
        "k": [5],
        "seeds": [1, 2, 3],
        "split": { "seed": 7 },
        "gateway": { "cache_dir": "cache", "api_key_env": KEY_ENV, "concurrency": 8 },
        "classify": { "shots": 2 },
        "bootstrap": { "b": 10000, "seed": 11 },
        "output_dir": "out"
    });
    std::fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(&config)? + "\n",
    )?;
    let cache = dir.join("cache");
    if cache.exists() {
        std::fs::remove_dir_all(&cache)?;
    }

    std::env::set_var(KEY_ENV, "unused");
    let out = tempfile::tempdir()?;
    let overrides = Overrides {
        gateway_mode: Some(GatewayMode::Record),
        output_dir: Some(out.path().to_string_lossy().into_owned()),
        cache_dir: None,
    };
    let config = RunConfig::load(&dir.join("config.json"), &overrides)?;
    let ctx = RunContext::new(config).with_transport(Arc::new(StandIn));
    for outcome in ctx.run_all()? {
        println!("{:<12} {}", outcome.stage, outcome.message);
    }
    println!(
        "{}",
        std::fs::read_to_string(out.path().join("report.txt"))?
    );
    Ok(())
}
