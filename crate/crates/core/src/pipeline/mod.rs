//! Stage-by-stage orchestration with file handoffs.
//!
//! Every stage reads the previous stage's files from the output directory,
//! checks that they were produced under the same config hash, and writes
//! its own outputs with that hash embedded.

mod config;

pub use config::{
    BootstrapConfig, ClassifyConfig, GatewayConfig, Overrides, RunConfig, SplitConfig,
};

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::augment::{
    augment_corpus, export_finetune_bundle, AugmentSummary, AugmentedExample, ExampleStream,
    RationaleMode, Selection,
};
use crate::corpus::{
    context_window, load_corpus, make_kshot_split, split_corpus, Corpus, Dialogue, KShot,
    KShotSplit, LabelSet, Partition, SplitRatios,
};
use crate::error::{Error, Result};
use crate::eval::{macro_f1, paired_bootstrap, BootstrapSummary, EvalReport};
use crate::fewshot::{
    classify_split, probe_items, ClassifierSetup, ClassifyFailure, PredictionRecord,
    PredictionsHeader, ProbeModel, Resolution, TIE_BREAK_POLICY,
};
use crate::gateway::{
    ChatRequest, Gateway, GatewayMode, HttpTransport, ResponseCache, Transport, MESSAGE_LAYOUT,
};
use crate::jsonl;
use crate::prompt::{build_rationale_prompt, LabelDefinitions, PromptMode, PromptTemplate};
use crate::rationale::{
    parse_per_line, parse_single, RationaleRecord, RationaleStore, ValiditySummary,
};

/// The pipeline stages, in execution order.
pub const STAGES: [&str; 8] = [
    "ingest",
    "rationalize",
    "split",
    "augment",
    "export",
    "classify",
    "evaluate",
    "report",
];

/// Files written by a stage.
#[derive(Debug, Clone, Default)]
pub struct StageOutcome {
    pub stage: &'static str,
    pub files: Vec<PathBuf>,
    pub message: String,
}

pub struct RunContext {
    pub config: RunConfig,
    pub hash: String,
    pub out_dir: PathBuf,
    /// Accept upstream files produced under a different config hash.
    pub force: bool,
    transport: Option<Arc<dyn Transport>>,
}

#[derive(Serialize)]
struct Hashed<T> {
    config_hash: String,
    #[serde(flatten)]
    inner: T,
}

impl RunContext {
    pub fn new(config: RunConfig) -> Self {
        let out_dir = config.resolve(&config.output_dir);
        Self {
            hash: config.hash(),
            config,
            out_dir,
            force: false,
            transport: None,
        }
    }

    pub fn force(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    /// Uses `transport` instead of HTTP for live and record modes.
    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = Some(transport);
        self
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out_dir.join(rel)
    }

    fn gateway(&self) -> Result<Gateway> {
        let g = &self.config.gateway;
        let cache = ResponseCache::new(self.config.resolve(&g.cache_dir));
        let transport = match (&self.transport, g.mode) {
            (Some(t), _) => Some(t.clone()),
            (None, GatewayMode::Replay) => None,
            (None, _) => Some(
                Arc::new(HttpTransport::from_env(&g.endpoint, &g.api_key_env)?)
                    as Arc<dyn Transport>,
            ),
        };
        Ok(Gateway::new(Some(cache), transport).with_retry(g.retry))
    }

    fn check_hash(&self, path: &Path, found: Option<&str>) -> Result<()> {
        let found = found.unwrap_or("");
        if found != self.hash && !self.force {
            return Err(Error::HashMismatch {
                path: path.to_path_buf(),
                expected: self.hash.clone(),
                found: found.to_string(),
            });
        }
        Ok(())
    }

    fn read_jsonl<T: serde::de::DeserializeOwned>(&self, rel: &str) -> Result<(Value, Vec<T>)> {
        let path = self.path(rel);
        let (header, items) = jsonl::read(&path)?;
        let header = header.unwrap_or(Value::Null);
        self.check_hash(&path, header["config_hash"].as_str())?;
        Ok((header, items))
    }

    fn read_hashed<T: serde::de::DeserializeOwned>(&self, rel: &str) -> Result<T> {
        let path = self.path(rel);
        let mut v: Value = jsonl::read_json(&path)?;
        let hash = v.as_object_mut().and_then(|o| o.remove("config_hash"));
        self.check_hash(&path, hash.as_ref().and_then(Value::as_str))?;
        Ok(serde_json::from_value(v)?)
    }

    fn write_hashed<T: Serialize>(&self, rel: &str, inner: T) -> Result<PathBuf> {
        let path = self.path(rel);
        jsonl::write_json(
            &path,
            &Hashed {
                config_hash: self.hash.clone(),
                inner,
            },
        )?;
        Ok(path)
    }

    fn labels(&self) -> LabelSet {
        LabelSet::for_task(self.config.task)
    }

    fn corpus(&self) -> Result<Corpus> {
        let (_, dialogues) = self.read_jsonl::<Dialogue>("corpus.jsonl")?;
        Corpus::new(self.labels(), dialogues)
    }

    fn partition(&self) -> Result<Partition> {
        self.read_hashed("splits/partition.json")
    }

    fn kshot(&self, k: KShot, seed: u64) -> Result<KShotSplit> {
        self.read_hashed(&split_file(k, seed))
    }

    fn store(&self) -> Result<RationaleStore> {
        let (_, records) = self.read_jsonl::<RationaleRecord>("rationales.jsonl")?;
        Ok(RationaleStore::new(records))
    }

    /// Every (k, seed) pair, k-major.
    fn runs(&self) -> Vec<(KShot, u64)> {
        self.config
            .k
            .iter()
            .flat_map(|&k| self.config.seeds.iter().map(move |&s| (k, s)))
            .collect()
    }

    pub fn run_stage(&self, stage: &str) -> Result<StageOutcome> {
        match stage {
            "ingest" => self.ingest(),
            "rationalize" => self.rationalize(),
            "split" => self.split(),
            "augment" => self.augment(),
            "export" => self.export(),
            "classify" => self.classify(),
            "evaluate" => self.evaluate(),
            "report" => self.report(),
            other => Err(Error::InvalidInput(format!("unknown stage {other:?}"))),
        }
    }

    /// Runs every stage in order.
    pub fn run_all(&self) -> Result<Vec<StageOutcome>> {
        STAGES.iter().map(|s| self.run_stage(s)).collect()
    }

    pub fn ingest(&self) -> Result<StageOutcome> {
        let labels = self.labels();
        let mut dialogues = Vec::new();
        for c in &self.config.corpus {
            dialogues.extend(load_corpus(self.config.resolve(c), self.config.task)?.dialogues);
        }
        let corpus = Corpus::new(labels.clone(), dialogues)?;

        let header = json!({
            "config_hash": self.hash,
            "task": self.config.task,
            "sources": self.config.corpus,
        });
        let corpus_path = self.path("corpus.jsonl");
        jsonl::write(&corpus_path, Some(&header), &corpus.dialogues)?;

        let mut label_counts: BTreeMap<&str, usize> =
            labels.labels.iter().map(|l| (l.as_str(), 0)).collect();
        for r in corpus.labeled_refs(None) {
            let (_, t) = corpus.resolve(&r)?;
            *label_counts.get_mut(t.label.as_deref().unwrap()).unwrap() += 1;
        }
        let domains: BTreeSet<&str> = corpus.dialogues.iter().map(|d| d.domain.as_str()).collect();
        let labeled = corpus.labeled_refs(None).len();
        let summary = self.write_hashed(
            "ingest.json",
            json!({
                "task": self.config.task,
                "dialogues": corpus.dialogues.len(),
                "turns": corpus.turn_count(),
                "labeled_turns": labeled,
                "label_counts": label_counts,
                "domains": domains,
            }),
        )?;
        Ok(StageOutcome {
            stage: "ingest",
            files: vec![corpus_path, summary],
            message: format!(
                "{} dialogues, {} turns ({labeled} labeled)",
                corpus.dialogues.len(),
                corpus.turn_count()
            ),
        })
    }

    pub fn rationalize(&self) -> Result<StageOutcome> {
        let corpus = self.corpus()?;
        let template = PromptTemplate::resolve(&self.config.template_spec())?;
        let g = &self.config.gateway;

        struct Job {
            dialogue: usize,
            targets: Vec<usize>,
            expected_blocks: usize,
        }
        let mut jobs = Vec::new();
        let mut requests = Vec::new();
        for (di, d) in corpus.dialogues.iter().enumerate() {
            let labeled: Vec<usize> = d
                .turns
                .iter()
                .enumerate()
                .filter(|(_, t)| t.label.is_some())
                .map(|(i, _)| i)
                .collect();
            if labeled.is_empty() {
                continue;
            }
            let mut push = |window: &[crate::corpus::Turn],
                            target_index: usize,
                            targets: Vec<usize>,
                            tag: String|
             -> Result<()> {
                let mut prompt = build_rationale_prompt(&template, window, &d.turns[target_index])?;
                prompt.provenance.refs.push(tag.clone());
                requests.push(ChatRequest {
                    model: g.model.clone(),
                    prompt: prompt.text,
                    temperature: g.temperature,
                    max_tokens: g.max_tokens,
                    request_tag: format!("rationale:{tag}"),
                });
                jobs.push(Job {
                    dialogue: di,
                    targets,
                    expected_blocks: prompt_blocks(template.mode(), window.len()),
                });
                Ok(())
            };
            match template.mode() {
                PromptMode::PerLine => {
                    let last = d.turns.len() - 1;
                    push(&d.turns[..last], last, labeled, d.dialogue_id.clone())?;
                }
                _ => {
                    for i in labeled {
                        let window = context_window(d, i, self.config.context_width)?;
                        push(window, i, vec![i], format!("{}#{i}", d.dialogue_id))?;
                    }
                }
            }
        }

        let gateway = self.gateway()?;
        let responses = gateway.batch_complete(&requests, g.mode, g.concurrency)?;
        let failed: Vec<(usize, &Error)> = responses
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, e)))
            .collect();
        if let Some((i, e)) = failed.first() {
            return Err(Error::InvalidInput(format!(
                "{} of {} rationale requests failed; first ({}): {e}",
                failed.len(),
                requests.len(),
                requests[*i].request_tag
            )));
        }

        let mut records = Vec::new();
        let mut reports = Vec::new();
        let mut invalid = Vec::new();
        for ((job, response), request) in jobs.iter().zip(&responses).zip(&requests) {
            let text = &response.as_ref().expect("failures returned above").text;
            let key = request.cache_key();
            let d = &corpus.dialogues[job.dialogue];
            let sets = match template.mode() {
                PromptMode::PerLine => parse_per_line(text, job.expected_blocks),
                _ => vec![parse_single(text)],
            };
            for &ti in &job.targets {
                let block = if template.mode() == PromptMode::PerLine {
                    ti
                } else {
                    0
                };
                let rs = sets[block].clone().with_source_key(key.as_str());
                let report = self.config.validity.validate(&rs, &d.turns[ti].speaker);
                if !report.valid {
                    invalid.push(json!({
                        "example_id": format!("{}#{ti}", d.dialogue_id),
                        "failure_notes": report.failure_notes,
                    }));
                }
                records.push(RationaleRecord::new(&d.dialogue_id, ti, &rs, &report));
                reports.push(report);
            }
        }

        let header = json!({
            "config_hash": self.hash,
            "template": template.id,
            "model": g.model,
            "temperature": g.temperature,
            "max_tokens": g.max_tokens,
            "message_layout": MESSAGE_LAYOUT,
        });
        let store_path = self.path("rationales.jsonl");
        jsonl::write(&store_path, Some(&header), &records)?;
        let validity = ValiditySummary::from_reports(&reports);
        let summary = self.write_hashed(
            "rationalize_summary.json",
            json!({ "requests": requests.len(), "validity": validity, "invalid": invalid }),
        )?;
        Ok(StageOutcome {
            stage: "rationalize",
            files: vec![store_path, summary],
            message: format!(
                "{} rationales, {:.1}% valid ({} parse failures, {} rule failures)",
                validity.total,
                validity.rate * 100.0,
                validity.parse_failures,
                validity.rule_failures
            ),
        })
    }

    pub fn split(&self) -> Result<StageOutcome> {
        let corpus = self.corpus()?;
        let partition = split_corpus(&corpus, self.config.split.ratios, self.config.split.seed)?;
        let mut files = vec![self.write_hashed(
            "splits/partition.json",
            PartitionFile {
                ratios: self.config.split.ratios,
                partition: partition.clone(),
            },
        )?];
        let train = corpus.subset(&partition.train);
        let mut warnings = 0;
        for (k, seed) in self.runs() {
            let split = make_kshot_split(&train, k, seed)?;
            warnings += split.warnings.len();
            files.push(self.write_hashed(&split_file(k, seed), split)?);
        }
        Ok(StageOutcome {
            stage: "split",
            message: format!(
                "{}/{}/{} dialogues; {} k-shot splits ({warnings} empty-label warnings)",
                partition.train.len(),
                partition.dev.len(),
                partition.test.len(),
                files.len() - 1
            ),
            files,
        })
    }

    pub fn augment(&self) -> Result<StageOutcome> {
        let corpus = self.corpus()?;
        let store = self.store()?;
        let partition = self.partition()?;
        let width = self.config.context_width;
        let mut files = Vec::new();
        let mut summaries = Vec::new();
        for &mode in &self.config.modes {
            for (name, ids) in [("dev", &partition.dev), ("test", &partition.test)] {
                let out = augment_corpus(
                    &corpus,
                    &store,
                    mode,
                    Selection::Full(Some(ids)),
                    width,
                    Some(name),
                )?;
                let rel = format!("augmented/{mode}/{name}.jsonl");
                files.push(self.write_examples(&rel, mode, name, None, &out.examples)?);
                summaries.push(SummaryRow::new(mode, name, None, out.summary));
            }
            for (k, seed) in self.runs() {
                let split = self.kshot(k, seed)?;
                let out = augment_corpus(
                    &corpus,
                    &store,
                    mode,
                    Selection::KShot(&split),
                    width,
                    Some("train"),
                )?;
                let rel = train_file(mode, k, seed);
                files.push(self.write_examples(
                    &rel,
                    mode,
                    "train",
                    Some((k, seed)),
                    &out.examples,
                )?);
                summaries.push(SummaryRow::new(mode, "train", Some((k, seed)), out.summary));
            }
        }
        let fallbacks: usize = summaries.iter().map(|s| s.summary.fallbacks).sum();
        files.push(self.write_hashed("augment_summary.json", json!({ "runs": summaries }))?);
        Ok(StageOutcome {
            stage: "augment",
            message: format!(
                "{} example files, {fallbacks} fallbacks in total",
                files.len() - 1
            ),
            files,
        })
    }

    fn write_examples(
        &self,
        rel: &str,
        mode: RationaleMode,
        part: &str,
        run: Option<(KShot, u64)>,
        examples: &[AugmentedExample],
    ) -> Result<PathBuf> {
        let header = json!({
            "config_hash": self.hash,
            "mode": mode,
            "part": part,
            "k": run.map(|r| r.0),
            "seed": run.map(|r| r.1),
        });
        let path = self.path(rel);
        jsonl::write(&path, Some(&header), examples)?;
        Ok(path)
    }

    pub fn export(&self) -> Result<StageOutcome> {
        let labels = self.labels();
        let partition = self.partition()?;
        let mut files = Vec::new();
        let mut bundles = Vec::new();
        for &mode in &self.config.modes {
            let (_, dev) =
                self.read_jsonl::<AugmentedExample>(&format!("augmented/{mode}/dev.jsonl"))?;
            let (_, test) =
                self.read_jsonl::<AugmentedExample>(&format!("augmented/{mode}/test.jsonl"))?;
            for (k, seed) in self.runs() {
                let (_, train) = self.read_jsonl::<AugmentedExample>(&train_file(mode, k, seed))?;
                let dir = self.path(&format!("bundles/{mode}_k{k}_seed{seed}"));
                let stream = |examples| ExampleStream {
                    labels: &labels,
                    examples,
                };
                let (_, digest) = export_finetune_bundle(
                    &dir,
                    stream(&train),
                    stream(&dev),
                    stream(&test),
                    mode,
                    self.config.hyperparameters.clone(),
                    json!({
                        "config_hash": self.hash,
                        "k": k,
                        "seed": seed,
                        "partition_seed": partition.seed,
                        "context_width": self.config.context_width,
                        "template": self.config.template,
                    }),
                )?;
                bundles.push(json!({
                    "bundle": format!("bundles/{mode}_k{k}_seed{seed}"),
                    "manifest_sha256": digest,
                }));
                files.push(dir.join("manifest.json"));
            }
        }
        files.push(self.write_hashed("export_summary.json", json!({ "bundles": bundles }))?);
        Ok(StageOutcome {
            stage: "export",
            message: format!("{} bundles", bundles.len()),
            files,
        })
    }

    pub fn classify(&self) -> Result<StageOutcome> {
        let corpus = self.corpus()?;
        let store = self.store()?;
        let partition = self.partition()?;
        let labels = self.labels();
        let definitions = match &self.config.definitions {
            Some(p) => LabelDefinitions::load(self.config.resolve(p))?,
            None => LabelDefinitions::builtin(self.config.task),
        };
        let test_refs = corpus.labeled_refs(Some(&partition.test));
        let domain = match &self.config.domain {
            Some(d) => d.clone(),
            None => test_refs
                .first()
                .and_then(|r| corpus.dialogue(&r.dialogue_id))
                .map(|d| d.domain.clone())
                .unwrap_or_default(),
        };
        let gateway = self.gateway()?;
        let g = &self.config.gateway;
        let cc = &self.config.classify;
        let width = self.config.context_width;

        let mut files = Vec::new();
        let mut runs = Vec::new();
        let mut failures_total = 0;
        for &mode in &self.config.modes {
            let items = probe_items(&corpus, &store, &test_refs, mode, width)?;
            for (k, seed) in self.runs() {
                let split = self.kshot(k, seed)?;
                let pool_refs: Vec<_> = split.refs(&labels).cloned().collect();
                let pool = probe_items(&corpus, &store, &pool_refs, mode, width)?;
                let setup = ClassifierSetup {
                    labels: &labels,
                    definitions: &definitions,
                    domain: &domain,
                    mode,
                    shots_per_side: cc.shots,
                    seed,
                    model: ProbeModel {
                        model: g.model.clone(),
                        temperature: g.temperature,
                        max_tokens: cc.max_tokens,
                    },
                };
                let out = classify_split(&items, &pool, &setup, &gateway, g.mode, g.concurrency)?;
                let header = PredictionsHeader {
                    labels: labels.labels.clone(),
                    mode,
                    shots: cc.shots,
                    seed,
                    k: Some(k),
                    setting: cc.setting.clone(),
                    config_hash: self.hash.clone(),
                    tie_break: TIE_BREAK_POLICY.to_string(),
                    source: "fewshot".to_string(),
                };
                let path = self.path(&format!(
                    "predictions/{}/{mode}/k{k}_seed{seed}.jsonl",
                    cc.setting
                ));
                jsonl::write(&path, Some(&serde_json::to_value(&header)?), &out.records)?;
                files.push(path);
                failures_total += out.failures.len();
                runs.push(ClassifyRun {
                    mode,
                    k,
                    seed,
                    predictions: out.records.len(),
                    histogram: out.histogram,
                    failures: out.failures,
                });
            }
        }
        files.push(self.write_hashed(
            "classify_summary.json",
            json!({ "domain": domain, "runs": runs }),
        )?);
        Ok(StageOutcome {
            stage: "classify",
            message: format!(
                "{} prediction files, {failures_total} failed examples",
                files.len() - 1
            ),
            files,
        })
    }

    pub fn evaluate(&self) -> Result<StageOutcome> {
        let corpus = self.corpus()?;
        let labels = self.labels();
        let gold: BTreeMap<String, String> = corpus
            .labeled_refs(None)
            .into_iter()
            .map(|r| {
                let label = corpus.resolve(&r).map(|(_, t)| t.label.clone().unwrap());
                label.map(|l| (r.example_id(), l))
            })
            .collect::<Result<_>>()?;

        let pred_dir = self.path("predictions");
        let mut paths = Vec::new();
        collect_jsonl(&pred_dir, &mut paths);
        if paths.is_empty() {
            return Err(Error::MissingArtifact(pred_dir));
        }
        paths.sort();

        type Key = (String, RationaleMode, Option<KShot>);
        let mut groups: BTreeMap<Key, BTreeMap<u64, Vec<PredictionRecord>>> = BTreeMap::new();
        for path in &paths {
            let (header, records) = jsonl::read::<PredictionRecord>(path)?;
            let header: PredictionsHeader = serde_json::from_value(header.ok_or_else(|| {
                Error::InvalidInput(format!("{} has no header line", path.display()))
            })?)?;
            self.check_hash(path, Some(&header.config_hash))?;
            if header.labels != labels.labels {
                return Err(Error::LabelSetMismatch(format!(
                    "{} uses labels {:?}",
                    path.display(),
                    header.labels
                )));
            }
            let key = (header.setting.clone(), header.mode, header.k);
            if groups
                .entry(key)
                .or_default()
                .insert(header.seed, records)
                .is_some()
            {
                return Err(Error::InvalidInput(format!(
                    "duplicate predictions for seed {} ({})",
                    header.seed,
                    path.display()
                )));
            }
        }

        let lookup = |id: &str| {
            gold.get(id)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("prediction for unknown example {id}")))
        };
        let bs = &self.config.bootstrap;
        let mut entries = Vec::new();
        let mut csv = String::from("config_hash,setting,mode,k,seed,macro_f1,n\n");
        for ((setting, mode, k), seeds) in &groups {
            let mut runs = BTreeMap::new();
            for (seed, records) in seeds {
                let g: Vec<String> = records
                    .iter()
                    .map(|r| lookup(&r.example_id))
                    .collect::<Result<_>>()?;
                let p: Vec<String> = records.iter().map(|r| r.predicted.clone()).collect();
                runs.insert(*seed, (g, p));
            }
            let mut report = EvalReport::from_seeds(&runs, &labels.labels)?;
            for (seed, f1) in &report.per_seed {
                csv.push_str(&format!(
                    "{},{setting},{mode},{},{seed},{f1},{}\n",
                    self.hash,
                    k.map_or("-".to_string(), |k| k.to_string()),
                    runs[seed].0.len()
                ));
            }
            if *mode != RationaleMode::None {
                let base_key = (setting.clone(), RationaleMode::None, *k);
                if let Some(base) = groups.get(&base_key) {
                    report.bootstrap = Some(self.bootstrap_vs(seeds, base, &lookup, &labels)?);
                }
            }
            entries.push(ReportEntry {
                setting: setting.clone(),
                mode: *mode,
                k: *k,
                report,
            });
        }

        let report_path = self.write_hashed(
            "report.json",
            ReportFile {
                metric: "macro_f1".to_string(),
                labels: labels.labels.clone(),
                b: bs.b,
                alpha: bs.alpha,
                bootstrap_seed: bs.seed,
                reports: entries,
            },
        )?;
        let csv_path = self.path("runs.csv");
        jsonl::write_file(&csv_path, csv.as_bytes())?;
        Ok(StageOutcome {
            stage: "evaluate",
            message: format!(
                "{} configurations scored from {} files",
                groups.len(),
                paths.len()
            ),
            files: vec![report_path, csv_path],
        })
    }

    fn bootstrap_vs(
        &self,
        system: &BTreeMap<u64, Vec<PredictionRecord>>,
        baseline: &BTreeMap<u64, Vec<PredictionRecord>>,
        lookup: &dyn Fn(&str) -> Result<String>,
        labels: &LabelSet,
    ) -> Result<BootstrapSummary> {
        let mut gold = Vec::new();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (seed, records) in system {
            let Some(base) = baseline.get(seed) else {
                continue;
            };
            let base: BTreeMap<&str, &str> = base
                .iter()
                .map(|r| (r.example_id.as_str(), r.predicted.as_str()))
                .collect();
            for r in records {
                if let Some(bp) = base.get(r.example_id.as_str()) {
                    gold.push(lookup(&r.example_id)?);
                    a.push(r.predicted.clone());
                    b.push(bp.to_string());
                }
            }
        }
        let bs = &self.config.bootstrap;
        let metric = |g: &[String], p: &[String]| macro_f1(g, p, &labels.labels).unwrap_or(0.0);
        let r = paired_bootstrap(&gold, &a, &b, metric, bs.b, bs.seed)?;
        Ok(BootstrapSummary {
            vs: RationaleMode::None.to_string(),
            p_value: r.p_value,
            b: r.b,
            seed: r.seed,
            delta_observed: r.delta_observed,
            degenerate: r.degenerate,
            significant: !r.degenerate && r.p_value < bs.alpha,
            alpha: bs.alpha,
        })
    }

    pub fn report(&self) -> Result<StageOutcome> {
        let file: ReportFile = self.read_hashed("report.json")?;
        let (csv, text) = render_grid(&file, &self.hash);
        let csv_path = self.path("report.csv");
        let txt_path = self.path("report.txt");
        jsonl::write_file(&csv_path, csv.as_bytes())?;
        jsonl::write_file(&txt_path, text.as_bytes())?;
        Ok(StageOutcome {
            stage: "report",
            message: format!("{} cells", file.reports.len()),
            files: vec![csv_path, txt_path],
        })
    }
}

fn prompt_blocks(mode: PromptMode, window_len: usize) -> usize {
    match mode {
        PromptMode::PerLine => window_len + 1,
        _ => 1,
    }
}

fn split_file(k: KShot, seed: u64) -> String {
    format!("splits/k{k}_seed{seed}.json")
}

fn train_file(mode: RationaleMode, k: KShot, seed: u64) -> String {
    format!("augmented/{mode}/train_k{k}_seed{seed}.jsonl")
}

fn collect_jsonl(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return;
    };
    for e in entries.flatten() {
        let p = e.path();
        if p.is_dir() {
            collect_jsonl(&p, out);
        } else if p.extension().is_some_and(|x| x == "jsonl") {
            out.push(p);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PartitionFile {
    ratios: SplitRatios,
    #[serde(flatten)]
    partition: Partition,
}

#[derive(Debug, Clone, Serialize)]
struct SummaryRow {
    mode: RationaleMode,
    part: String,
    k: Option<KShot>,
    seed: Option<u64>,
    summary: AugmentSummary,
}

impl SummaryRow {
    fn new(
        mode: RationaleMode,
        part: &str,
        run: Option<(KShot, u64)>,
        summary: AugmentSummary,
    ) -> Self {
        Self {
            mode,
            part: part.to_string(),
            k: run.map(|r| r.0),
            seed: run.map(|r| r.1),
            summary,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ClassifyRun {
    mode: RationaleMode,
    k: KShot,
    seed: u64,
    predictions: usize,
    histogram: BTreeMap<Resolution, usize>,
    failures: Vec<ClassifyFailure>,
}

/// One scored configuration in `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub setting: String,
    pub mode: RationaleMode,
    pub k: Option<KShot>,
    pub report: EvalReport,
}

/// Contents of `report.json` (besides the config hash).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub metric: String,
    pub labels: Vec<String>,
    pub b: usize,
    pub alpha: f64,
    pub bootstrap_seed: u64,
    pub reports: Vec<ReportEntry>,
}

/// Renders the modes × (setting, k) grid of `mean±std` cells, starring
/// cells significantly better than the baseline.
pub fn render_grid(file: &ReportFile, hash: &str) -> (String, String) {
    let mut columns: Vec<(String, Option<KShot>)> = Vec::new();
    let mut modes: Vec<RationaleMode> = Vec::new();
    for e in &file.reports {
        if !columns.contains(&(e.setting.clone(), e.k)) {
            columns.push((e.setting.clone(), e.k));
        }
        if !modes.contains(&e.mode) {
            modes.push(e.mode);
        }
    }
    columns.sort();
    modes.sort();

    let col_name = |(s, k): &(String, Option<KShot>)| match k {
        Some(k) => format!("{s} k={k}"),
        None => s.clone(),
    };
    let cell = |mode: RationaleMode, col: &(String, Option<KShot>)| {
        file.reports
            .iter()
            .find(|e| e.mode == mode && e.setting == col.0 && e.k == col.1)
            .map(|e| {
                let star = e.report.bootstrap.as_ref().is_some_and(|b| b.significant);
                format!(
                    "{}{}",
                    e.report.summary().cell(),
                    if star { "*" } else { "" }
                )
            })
            .unwrap_or_else(|| "-".to_string())
    };

    let mut header = vec!["mode".to_string()];
    header.extend(columns.iter().map(col_name));
    let rows: Vec<Vec<String>> = modes
        .iter()
        .map(|&m| {
            let mut row = vec![m.to_string()];
            row.extend(columns.iter().map(|c| cell(m, c)));
            row
        })
        .collect();

    let mut csv = format!("{},config_hash\n", header.join(","));
    for row in &rows {
        csv.push_str(&format!("{},{hash}\n", row.join(",")));
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            std::iter::once(&header)
                .chain(&rows)
                .map(|r| r[i].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |r: &[String]| {
        r.iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}", w = *w))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut text = format!(
        "{} (mean±std over seeds, %); * = p < {} vs NONE, paired bootstrap b={}\nconfig {hash}\n\n",
        file.metric, file.alpha, file.b
    );
    text.push_str(&line(&header));
    text.push('\n');
    for row in &rows {
        text.push_str(&line(row));
        text.push('\n');
    }
    (csv, text)
}
