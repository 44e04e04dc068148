//! Run configuration: parsing, exhaustive validation and hashing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::augment::{Hyperparameters, RationaleMode};
use crate::corpus::{KShot, SplitRatios, Task, DEFAULT_CONTEXT_WIDTH, DEFAULT_K_VALUES};
use crate::error::{Error, Result};
use crate::eval::{DEFAULT_ALPHA, DEFAULT_BOOTSTRAP_SAMPLES};
use crate::gateway::{GatewayMode, RetryPolicy, MAX_TEMPERATURE, MAX_TOKENS_LIMIT};
use crate::prompt::PromptTemplate;
use crate::rationale::ValidityRules;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default = "default_mode")]
    pub mode: GatewayMode,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: String,
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_mode() -> GatewayMode {
    GatewayMode::Replay
}
fn default_cache_dir() -> String {
    "cache".to_string()
}
fn default_endpoint() -> String {
    "https://api.openai.com/v1/chat/completions".to_string()
}
fn default_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}
fn default_model() -> String {
    "gpt-3.5-turbo-16k".to_string()
}
fn default_max_tokens() -> u32 {
    1024
}
fn default_concurrency() -> usize {
    4
}

impl Default for GatewayConfig {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("defaults deserialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    /// Positive and negative shots per label; 0 for zero-shot.
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default = "default_probe_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_setting")]
    pub setting: String,
}

fn default_shots() -> usize {
    5
}
fn default_probe_tokens() -> u32 {
    8
}
fn default_setting() -> String {
    "ID".to_string()
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            shots: default_shots(),
            max_tokens: default_probe_tokens(),
            setting: default_setting(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_b")]
    pub b: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_b() -> usize {
    DEFAULT_BOOTSTRAP_SAMPLES
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            b: default_b(),
            seed: 0,
            alpha: default_alpha(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default)]
    pub ratios: SplitRatios,
    #[serde(default)]
    pub seed: u64,
}

/// Configuration file contents before validation. Loosely typed so that
/// every problem can be reported at once.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    task: Option<String>,
    #[serde(default)]
    corpus: Vec<String>,
    domain: Option<String>,
    template: Option<String>,
    definitions: Option<String>,
    #[serde(default = "default_width")]
    context_width: i64,
    #[serde(default = "default_modes")]
    modes: Vec<String>,
    #[serde(default = "default_k")]
    k: Vec<Value>,
    #[serde(default = "default_seeds")]
    seeds: Vec<u64>,
    #[serde(default)]
    split: SplitConfig,
    #[serde(default)]
    validity: ValidityRules,
    #[serde(default)]
    gateway: GatewayConfig,
    #[serde(default)]
    classify: ClassifyConfig,
    #[serde(default)]
    bootstrap: BootstrapConfig,
    #[serde(default)]
    hyperparameters: Hyperparameters,
    #[serde(default = "default_output")]
    output_dir: String,
}

fn default_width() -> i64 {
    DEFAULT_CONTEXT_WIDTH as i64
}
fn default_modes() -> Vec<String> {
    RationaleMode::EVERY.iter().map(|m| m.to_string()).collect()
}
fn default_k() -> Vec<Value> {
    DEFAULT_K_VALUES
        .iter()
        .map(|&k| Value::from(k))
        .chain([Value::from("all")])
        .collect()
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}
fn default_output() -> String {
    "out".to_string()
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub task: Task,
    pub corpus: Vec<String>,
    pub domain: Option<String>,
    pub template: String,
    pub definitions: Option<String>,
    pub context_width: usize,
    pub modes: Vec<RationaleMode>,
    pub k: Vec<KShot>,
    pub seeds: Vec<u64>,
    pub split: SplitConfig,
    pub validity: ValidityRules,
    pub gateway: GatewayConfig,
    pub classify: ClassifyConfig,
    pub bootstrap: BootstrapConfig,
    pub hyperparameters: Hyperparameters,
    pub output_dir: String,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub gateway_mode: Option<GatewayMode>,
    pub output_dir: Option<String>,
    pub cache_dir: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::Config(vec![format!(
                    "config file {} does not exist",
                    path.display()
                )])
            } else {
                Error::io(path, e)
            }
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_json(&text, &base, overrides)
    }

    pub fn from_json(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(vec![format!("config is not valid: {e}")]))?;
        Self::validate(raw, base_dir, overrides)
    }

    fn validate(mut raw: RawConfig, base_dir: &Path, overrides: &Overrides) -> Result<Self> {
        if let Some(m) = overrides.gateway_mode {
            raw.gateway.mode = m;
        }
        if let Some(o) = &overrides.output_dir {
            raw.output_dir = o.clone();
        }
        if let Some(c) = &overrides.cache_dir {
            raw.gateway.cache_dir = c.clone();
        }
        let mut errors = Vec::new();
        let resolve = |p: &str| base_dir.join(p);

        let task = match raw.task.as_deref() {
            None => {
                errors.push("task is required (ERC or RES)".to_string());
                Task::Erc
            }
            Some(t) => t.parse().unwrap_or_else(|_| {
                errors.push(format!("task {t:?} must be ERC or RES"));
                Task::Erc
            }),
        };

        if raw.corpus.is_empty() {
            errors.push("at least one corpus path is required".to_string());
        }
        for c in &raw.corpus {
            if !resolve(c).is_file() {
                errors.push(format!(
                    "corpus file {} does not exist",
                    resolve(c).display()
                ));
            }
        }

        let template = raw.template.clone().unwrap_or_else(|| match task {
            Task::Erc => "erc-v1".to_string(),
            Task::Res => "res-v1".to_string(),
        });
        let template_spec = if PromptTemplate::builtin_ids().any(|id| id == template) {
            template.clone()
        } else {
            resolve(&template).to_string_lossy().into_owned()
        };
        match PromptTemplate::resolve(&template_spec) {
            Ok(t) if t.task != task => {
                errors.push(format!("template {template} is for {}, not {task}", t.task))
            }
            Ok(_) => {}
            Err(e) => errors.push(format!("template {template}: {e}")),
        }

        if let Some(d) = &raw.definitions {
            if !resolve(d).is_file() {
                errors.push(format!(
                    "definitions file {} does not exist",
                    resolve(d).display()
                ));
            }
        }

        if raw.context_width < 0 {
            errors.push(format!(
                "context_width must be >= 0, got {}",
                raw.context_width
            ));
        }

        let mut modes = Vec::new();
        for m in &raw.modes {
            match m.parse::<RationaleMode>() {
                Ok(mode) if !modes.contains(&mode) => modes.push(mode),
                Ok(_) => errors.push(format!("mode {m} listed twice")),
                Err(_) => errors.push(format!("mode {m:?} is not one of NONE, INT, ASM, IMP, ALL")),
            }
        }
        if modes.is_empty() {
            errors.push("at least one rationale mode is required".to_string());
        }

        let mut ks = Vec::new();
        for v in &raw.k {
            match serde_json::from_value::<KShot>(v.clone()) {
                Ok(k) if !ks.contains(&k) => ks.push(k),
                Ok(k) => errors.push(format!("k value {k} listed twice")),
                Err(_) => errors.push(format!("k value {v} must be a positive integer or \"all\"")),
            }
        }
        if ks.is_empty() {
            errors.push("at least one k value is required".to_string());
        }

        if raw.seeds.len() < 2 {
            errors.push(format!(
                "at least 2 seeds are needed for mean±std, got {}",
                raw.seeds.len()
            ));
        }
        let mut sorted = raw.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != raw.seeds.len() {
            errors.push("seeds must be distinct".to_string());
        }

        let r = raw.split.ratios;
        if !(r.train > 0.0 && r.dev > 0.0 && r.test > 0.0)
            || ((r.train + r.dev + r.test) - 1.0).abs() > 1e-9
        {
            errors.push(format!(
                "split ratios must be positive and sum to 1, got {}/{}/{}",
                r.train, r.dev, r.test
            ));
        }

        let g = &raw.gateway;
        if !(0.0..=MAX_TEMPERATURE).contains(&g.temperature) {
            errors.push(format!(
                "gateway.temperature {} outside [0, 2]",
                g.temperature
            ));
        }
        for (name, v) in [
            ("gateway.max_tokens", g.max_tokens),
            ("classify.max_tokens", raw.classify.max_tokens),
        ] {
            if !(1..=MAX_TOKENS_LIMIT).contains(&v) {
                errors.push(format!("{name} {v} outside [1, {MAX_TOKENS_LIMIT}]"));
            }
        }
        if g.concurrency == 0 {
            errors.push("gateway.concurrency must be at least 1".to_string());
        }
        if g.model.trim().is_empty() {
            errors.push("gateway.model is empty".to_string());
        }
        if g.mode == GatewayMode::Replay && !resolve(&g.cache_dir).is_dir() {
            errors.push(format!(
                "replay mode needs cache directory {}",
                resolve(&g.cache_dir).display()
            ));
        }
        if g.mode != GatewayMode::Replay && std::env::var(&g.api_key_env).is_err() {
            errors.push(format!(
                "{:?} mode needs credentials in ${}",
                g.mode, g.api_key_env
            ));
        }

        if raw.bootstrap.b == 0 {
            errors.push("bootstrap.b must be at least 1".to_string());
        }
        if !(raw.bootstrap.alpha > 0.0 && raw.bootstrap.alpha < 1.0) {
            errors.push(format!(
                "bootstrap.alpha {} outside (0, 1)",
                raw.bootstrap.alpha
            ));
        }
        if !matches!(raw.classify.setting.as_str(), "ID" | "TF") {
            errors.push(format!(
                "classify.setting {:?} must be ID or TF",
                raw.classify.setting
            ));
        }

        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        Ok(Self {
            task,
            corpus: raw.corpus,
            domain: raw.domain,
            template,
            definitions: raw.definitions,
            context_width: raw.context_width as usize,
            modes,
            k: ks,
            seeds: raw.seeds,
            split: raw.split,
            validity: raw.validity,
            gateway: raw.gateway,
            classify: raw.classify,
            bootstrap: raw.bootstrap,
            hyperparameters: raw.hyperparameters,
            output_dir: raw.output_dir,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn template_spec(&self) -> String {
        if PromptTemplate::builtin_ids().any(|id| id == self.template) {
            self.template.clone()
        } else {
            self.resolve(&self.template).to_string_lossy().into_owned()
        }
    }

    /// Digest of the canonical JSON config. Settings that cannot change
    /// results (output location, gateway mode, concurrency, retry, credential
    /// variable) are left out.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object_mut().unwrap();
        obj.remove("output_dir");
        if let Some(g) = obj.get_mut("gateway").and_then(Value::as_object_mut) {
            for k in [
                "mode",
                "concurrency",
                "retry",
                "api_key_env",
                "endpoint",
                "cache_dir",
            ] {
                g.remove(k);
            }
        }
        let canonical = serde_json::to_vec(&sort_keys(v)).expect("value serializes");
        hex::encode(Sha256::digest(canonical))[..16].to_string()
    }
}

fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let sorted: BTreeMap<String, Value> =
                map.into_iter().map(|(k, v)| (k, sort_keys(v))).collect();
            Value::Object(sorted.into_iter().collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}
