//! Resumable, linear pipeline:
//! signals → embed → pseudo → filter → pretrain → train → predict → eval.
//!
//! Every stage reads its inputs from the work directory, writes its outputs
//! atomically and records input hashes in `manifest.json`. A stage whose
//! recorded inputs are unchanged and whose outputs still exist is skipped.

mod config;
mod manifest;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use config::{ClassifierChoice, PathsConfig, PipelineConfig, ServiceConfig};
pub use manifest::{hash_bytes, hash_file, Freshness, Manifest, StageRecord, MANIFEST_FILE};

use crate::corpus::{load_corpus, load_label_schema, Corpus, Document};
use crate::embedding::{self, build_from_embeddings, write_build_report, EmbedCache, EmbedClient, EmbeddingStore};
use crate::error::{Error, Result};
use crate::filter::{compute_cii, compute_cir, filter_signals, write_cir_report};
use crate::jsonl::{self, Appender};
use crate::metrics::{self, aggregate_runs, score, Metrics, ReportRow, RunRecord};
use crate::model::{
    load_classifier, load_model, predict_ids, pretrain_classifier, save_classifier, save_model, DocFeatures,
    FeatureTable, TrainInputs, Trainer,
};
use crate::pseudo::{assign_pseudo_labels, read_pseudo_labels, write_pseudo_labels};
use crate::service::{EmbeddingService, HttpService, MaskFillService, PosTagger, PosToken};
use crate::signals::{
    acquire_all_mlm, extract_doc_signals_with, read_signal_file, write_signal_file, MlmCache, MlmClient,
    PromptTemplate, SignalSource, DEFAULT_NOUN_TAGS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Signals,
    Embed,
    Pseudo,
    Filter,
    Pretrain,
    Train,
    Predict,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Signals,
        Stage::Embed,
        Stage::Pseudo,
        Stage::Filter,
        Stage::Pretrain,
        Stage::Train,
        Stage::Predict,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Signals => "signals",
            Stage::Embed => "embed",
            Stage::Pseudo => "pseudo",
            Stage::Filter => "filter",
            Stage::Pretrain => "pretrain",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Eval => "eval",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown stage {s:?}")))
    }
}

/// Artifact file names inside the work directory.
pub mod artifacts {
    pub const SIGNALS: &str = "signals.jsonl";
    pub const STORE: &str = "store.bin";
    pub const EMBED_REPORT: &str = "embed_report.jsonl";
    pub const FEATURES: &str = "features.bin";
    pub const PSEUDO_LABELS: &str = "pseudo_labels.jsonl";
    pub const FILTERED_SIGNALS: &str = "filtered_signals.jsonl";
    pub const CIR_REPORT: &str = "cir_report.jsonl";
    pub const CLASSIFIER: &str = "classifier.bin";
    pub const PRETRAIN_LOG: &str = "pretrain_log.txt";
    pub const MODEL: &str = "model.ckpt";
    pub const TRAIN_LOG: &str = "train_log.txt";
    pub const PREDICTIONS: &str = "predictions.jsonl";
    pub const METRICS: &str = "metrics.json";
    pub const RUN: &str = "run.jsonl";
    pub const REPORT_TXT: &str = "report.txt";
    pub const REPORT_JSONL: &str = "report.jsonl";
}

/// Live or mock language-model services. `None` entries mean cache-only.
#[derive(Clone, Default)]
pub struct Services {
    pub mask_fill: Option<Arc<dyn MaskFillService>>,
    pub embedding: Option<Arc<dyn EmbeddingService>>,
    pub pos: Option<Arc<dyn PosTagger>>,
}

impl Services {
    pub fn offline() -> Self {
        Services::default()
    }

    pub fn http(endpoint: &str) -> Self {
        Services {
            mask_fill: Some(Arc::new(HttpService::new(endpoint))),
            embedding: Some(Arc::new(HttpService::new(endpoint))),
            pos: Some(Arc::new(HttpService::new(endpoint))),
        }
    }

    /// One object serving every endpoint, e.g. a mock.
    pub fn all<S>(service: Arc<S>) -> Self
    where
        S: MaskFillService + EmbeddingService + PosTagger + 'static,
    {
        Services {
            mask_fill: Some(service.clone()),
            embedding: Some(service.clone()),
            pos: Some(service),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub doc_id: String,
    #[serde(rename = "class")]
    pub class_index: usize,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PosCacheRecord {
    doc_id: String,
    tokens: Vec<PosToken>,
}

/// An input a stage reads: a file produced upstream, or a user-supplied one.
enum Input {
    Artifact(PathBuf, Stage),
    User(PathBuf),
    /// Read and hashed if present; never required.
    Cache(PathBuf),
}

struct Plan {
    inputs: Vec<Input>,
    config: serde_json::Value,
    outputs: Vec<PathBuf>,
}

pub struct Pipeline {
    config: PipelineConfig,
    services: Services,
    force: bool,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, services: Services) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline {
            config,
            services,
            force: false,
        })
    }

    /// Rerun stages even when their inputs are unchanged.
    pub fn with_force(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.config.paths.work_dir.join(name)
    }

    fn plan(&self, stage: Stage) -> Plan {
        use artifacts as a;
        let c = &self.config;
        let p = &c.paths;
        let t = &c.train;
        let art = |name: &str, from: Stage| Input::Artifact(self.artifact(name), from);
        let out = |names: &[&str]| names.iter().map(|n| self.artifact(n)).collect::<Vec<_>>();
        match stage {
            Stage::Signals => {
                let mut inputs = vec![Input::User(p.schema.clone()), Input::User(p.train_corpus.clone())];
                let config = match c.source {
                    SignalSource::Mlm => {
                        inputs.push(Input::Cache(p.mlm_cache.clone()));
                        json!({"source": "mlm", "k": t.k, "template": c.service.template,
                               "model": c.service.model, "max_input_tokens": c.service.max_input_tokens})
                    }
                    SignalSource::Doc => {
                        inputs.push(Input::Cache(p.pos_cache.clone()));
                        json!({"source": "doc"})
                    }
                };
                Plan {
                    inputs,
                    config,
                    outputs: out(&[a::SIGNALS]),
                }
            }
            Stage::Embed => Plan {
                inputs: vec![
                    art(a::SIGNALS, Stage::Signals),
                    Input::User(p.schema.clone()),
                    Input::User(p.train_corpus.clone()),
                    Input::User(p.test_corpus.clone()),
                    Input::Cache(p.embed_cache.clone()),
                ],
                config: json!({"model": c.service.model, "dim": c.service.dim, "layer": c.service.layer,
                               "max_input_tokens": c.service.max_input_tokens, "max_len": t.max_len}),
                outputs: out(&[a::STORE, a::EMBED_REPORT, a::FEATURES]),
            },
            Stage::Pseudo => Plan {
                inputs: vec![
                    art(a::SIGNALS, Stage::Signals),
                    art(a::STORE, Stage::Embed),
                    Input::User(p.schema.clone()),
                ],
                config: json!({"gamma": t.gamma}),
                outputs: out(&[a::PSEUDO_LABELS]),
            },
            Stage::Filter => Plan {
                inputs: vec![
                    art(a::SIGNALS, Stage::Signals),
                    art(a::PSEUDO_LABELS, Stage::Pseudo),
                    Input::User(p.schema.clone()),
                ],
                config: json!({"t": t.t}),
                outputs: out(&[a::FILTERED_SIGNALS, a::CIR_REPORT]),
            },
            Stage::Pretrain => Plan {
                inputs: vec![
                    art(a::PSEUDO_LABELS, Stage::Pseudo),
                    art(a::FEATURES, Stage::Embed),
                    Input::User(p.schema.clone()),
                ],
                config: json!({"classifier": c.classifier, "seed": t.seed, "lr": t.pretrain_learning_rate,
                               "epochs": t.pretrain_epochs, "batch_size": t.batch_size}),
                outputs: out(&[a::CLASSIFIER, a::PRETRAIN_LOG]),
            },
            Stage::Train => {
                let mut inputs = vec![
                    art(a::FILTERED_SIGNALS, Stage::Filter),
                    art(a::PSEUDO_LABELS, Stage::Pseudo),
                    art(a::FEATURES, Stage::Embed),
                    art(a::CLASSIFIER, Stage::Pretrain),
                ];
                if t.init_word_embeddings_from_sr {
                    inputs.push(art(a::STORE, Stage::Embed));
                }
                Plan {
                    inputs,
                    config: json!({"train": t, "classifier": c.classifier}),
                    outputs: out(&[a::MODEL, a::TRAIN_LOG]),
                }
            }
            Stage::Predict => Plan {
                inputs: vec![
                    art(a::MODEL, Stage::Train),
                    art(a::FEATURES, Stage::Embed),
                    Input::User(p.schema.clone()),
                    Input::User(p.test_corpus.clone()),
                ],
                config: json!({}),
                outputs: out(&[a::PREDICTIONS]),
            },
            Stage::Eval => Plan {
                inputs: vec![
                    art(a::PREDICTIONS, Stage::Predict),
                    Input::User(p.schema.clone()),
                    Input::User(p.test_corpus.clone()),
                ],
                config: json!({}),
                outputs: out(&[a::METRICS, a::RUN, a::REPORT_TXT, a::REPORT_JSONL]),
            },
        }
    }

    fn check_inputs(&self, plan: &Plan) -> Result<()> {
        for input in &plan.inputs {
            match input {
                Input::Artifact(path, from) if !path.exists() => {
                    return Err(Error::MissingArtifact {
                        stage: from.name().to_string(),
                        path: path.clone(),
                    })
                }
                Input::User(path) if !path.exists() => {
                    return Err(Error::validation(format!("input {} does not exist", path.display())))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn hash_inputs(&self, plan: &Plan) -> Result<BTreeMap<String, String>> {
        let mut hashes = BTreeMap::new();
        for input in &plan.inputs {
            let (Input::Artifact(path, _) | Input::User(path) | Input::Cache(path)) = input;
            hashes.insert(path.display().to_string(), hash_file(path)?);
        }
        let cfg = serde_json::to_vec(&plan.config).map_err(|e| Error::validation(e.to_string()))?;
        hashes.insert("config".into(), hash_bytes(&cfg));
        Ok(hashes)
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageStatus> {
        let plan = self.plan(stage);
        self.check_inputs(&plan)?;
        let work = &self.config.paths.work_dir;
        fs::create_dir_all(work).map_err(|e| Error::io(format!("creating {}", work.display()), e))?;
        let mut manifest = Manifest::load(work)?;
        let before = self.hash_inputs(&plan)?;
        match manifest.freshness(stage.name(), &before) {
            Freshness::Fresh if !self.force => {
                log::info!("{stage}: inputs unchanged, skipping");
                return Ok(StageStatus::Skipped);
            }
            Freshness::Stale(changed) => {
                log::warn!("{stage}: stale artifacts, inputs changed since last run: {}", changed.join(", "));
            }
            _ => {}
        }
        log::info!("{stage}: running");
        match stage {
            Stage::Signals => self.run_signals()?,
            Stage::Embed => self.run_embed()?,
            Stage::Pseudo => self.run_pseudo()?,
            Stage::Filter => self.run_filter()?,
            Stage::Pretrain => self.run_pretrain()?,
            Stage::Train => self.run_train()?,
            Stage::Predict => self.run_predict()?,
            Stage::Eval => self.run_eval()?,
        }
        // caches may have grown while the stage ran
        let after = self.hash_inputs(&plan)?;
        manifest.record(
            stage.name(),
            StageRecord {
                inputs: after,
                outputs: plan.outputs,
                seed: self.config.train.seed,
            },
        );
        manifest.save(work)?;
        Ok(StageStatus::Ran)
    }

    pub fn run_all(&self) -> Result<Vec<(Stage, StageStatus)>> {
        Stage::ALL
            .into_iter()
            .map(|s| self.run_stage(s).map(|st| (s, st)))
            .collect()
    }

    fn train_corpus(&self) -> Result<Corpus> {
        let schema = load_label_schema(&self.config.paths.schema)?;
        load_corpus(&self.config.paths.train_corpus, &schema)
    }

    fn test_corpus(&self) -> Result<Corpus> {
        let schema = load_label_schema(&self.config.paths.schema)?;
        load_corpus(&self.config.paths.test_corpus, &schema)
    }

    fn noun_tags(&self) -> Result<Vec<String>> {
        if let Some(svc) = &self.services.embedding {
            if let Some(tags) = svc.info()?.noun_tags {
                return Ok(tags);
            }
        }
        Ok(DEFAULT_NOUN_TAGS.iter().map(|s| s.to_string()).collect())
    }

    fn run_signals(&self) -> Result<()> {
        let corpus = self.train_corpus()?;
        let c = &self.config;
        let sets = match c.source {
            SignalSource::Mlm => {
                ensure_parent(&c.paths.mlm_cache)?;
                let client = MlmClient::new(
                    self.services.mask_fill.as_deref(),
                    c.service.model.clone(),
                    c.service.max_input_tokens,
                    PromptTemplate::new(c.service.template.clone())?,
                    MlmCache::open(&c.paths.mlm_cache)?,
                );
                acquire_all_mlm(&corpus.documents, &client, c.train.k, c.service.parallelism)?
            }
            SignalSource::Doc => {
                let tags = self.noun_tags()?;
                let tag_refs: Vec<&str> = tags.iter().map(String::as_str).collect();
                let tagged = self.pos_tag_missing(&corpus.documents)?;
                tagged
                    .iter()
                    .map(|d| extract_doc_signals_with(d, &tag_refs))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let empty = sets.iter().filter(|s| s.is_empty()).count();
        if empty > 0 {
            log::warn!("{empty} documents have no signal words");
        }
        write_signal_file(&self.artifact(artifacts::SIGNALS), &sets)
    }

    /// Fills in POS tokens for documents that lack them, through the cache.
    fn pos_tag_missing(&self, docs: &[Document]) -> Result<Vec<Document>> {
        let path = &self.config.paths.pos_cache;
        if docs.iter().all(|d| d.tokens.is_some()) {
            return Ok(docs.to_vec());
        }
        ensure_parent(path)?;
        let mut cached: HashMap<String, Vec<PosToken>> = jsonl::read_records_if_exists::<PosCacheRecord>(path)?
            .into_iter()
            .map(|r| (r.doc_id, r.tokens))
            .collect();
        let mut appender = Appender::open(path)?;
        let mut out = Vec::with_capacity(docs.len());
        for d in docs {
            if d.tokens.is_some() {
                out.push(d.clone());
                continue;
            }
            let tokens = match cached.get(&d.id) {
                Some(t) => t.clone(),
                None => {
                    let svc = self.services.pos.as_ref().ok_or_else(|| {
                        Error::Transport(format!("offline and no cached POS tags for document {:?}", d.id))
                    })?;
                    let t = svc.tag(&d.text)?;
                    appender.append(&PosCacheRecord {
                        doc_id: d.id.clone(),
                        tokens: t.clone(),
                    })?;
                    cached.insert(d.id.clone(), t.clone());
                    t
                }
            };
            out.push(d.clone().with_tokens(tokens.into_iter().map(|t| (t.token, t.pos)).collect()));
        }
        Ok(out)
    }

    fn embedding_dim(&self) -> Result<usize> {
        if let Some(d) = self.config.service.dim {
            return Ok(d);
        }
        match &self.services.embedding {
            Some(svc) => Ok(svc.info()?.dim),
            None => Err(Error::validation(
                "service.dim must be set in the config when running offline",
            )),
        }
    }

    fn run_embed(&self) -> Result<()> {
        let c = &self.config;
        let train = self.train_corpus()?;
        let test = self.test_corpus()?;
        let signals = read_signal_file(&self.artifact(artifacts::SIGNALS))?;
        let dim = self.embedding_dim()?;
        ensure_parent(&c.paths.embed_cache)?;
        let client = EmbedClient::new(
            self.services.embedding.as_deref(),
            c.service.model.clone(),
            dim,
            c.service.max_input_tokens,
            EmbedCache::open(&c.paths.embed_cache)?,
        );

        let mut words: BTreeSet<String> = signals.iter().flat_map(|s| s.word_list().map(String::from)).collect();
        words.extend(train.schema.all_words().map(String::from));
        let train_emb = client.embed_all(&train.documents, c.service.parallelism)?;
        let (store, report) = build_from_embeddings(&train_emb, &words, &client, &c.service.layer)?;
        if !report.excluded.is_empty() {
            log::warn!("{} words have no representation", report.excluded.len());
        }
        let test_emb = client.embed_all(&test.documents, c.service.parallelism)?;

        let mut features = FeatureTable::new(dim, c.train.max_len);
        for (doc, emb) in train
            .documents
            .iter()
            .zip(&train_emb)
            .chain(test.documents.iter().zip(&test_emb))
        {
            if features.get(&doc.id).is_some() {
                continue;
            }
            features.insert(doc.id.clone(), DocFeatures::from_embedding(emb, dim, c.train.max_len)?)?;
        }
        store.save(&self.artifact(artifacts::STORE))?;
        write_build_report(&self.artifact(artifacts::EMBED_REPORT), &report)?;
        features.save(&self.artifact(artifacts::FEATURES))
    }

    fn run_pseudo(&self) -> Result<()> {
        let schema = load_label_schema(&self.config.paths.schema)?;
        let signals = read_signal_file(&self.artifact(artifacts::SIGNALS))?;
        let store = EmbeddingStore::load(&self.artifact(artifacts::STORE))?;
        let labels = assign_pseudo_labels(&signals, &store, &schema, self.config.train.gamma)?;
        log::info!("{} of {} documents pseudo-labeled", labels.len(), signals.len());
        write_pseudo_labels(&self.artifact(artifacts::PSEUDO_LABELS), &labels)
    }

    fn run_filter(&self) -> Result<()> {
        let schema = load_label_schema(&self.config.paths.schema)?;
        let signals = read_signal_file(&self.artifact(artifacts::SIGNALS))?;
        let labels = read_pseudo_labels(&self.artifact(artifacts::PSEUDO_LABELS))?;
        let cii = compute_cii(&signals, &labels, schema.num_classes())?;
        let cir = compute_cir(&cii);
        let t = self.config.train.t;
        let filtered = filter_signals(&signals, &cir, t)?;
        write_signal_file(&self.artifact(artifacts::FILTERED_SIGNALS), &filtered)?;
        write_cir_report(&self.artifact(artifacts::CIR_REPORT), &cir, t)
    }

    fn run_pretrain(&self) -> Result<()> {
        let schema = load_label_schema(&self.config.paths.schema)?;
        let labels = read_pseudo_labels(&self.artifact(artifacts::PSEUDO_LABELS))?;
        let features = FeatureTable::load(&self.artifact(artifacts::FEATURES))?;
        let spec = self.config.classifier.spec(features.dim(), schema.num_classes());
        let out = pretrain_classifier(&labels, &features, &spec, &self.config.train)?;
        let log: String = out
            .epoch_losses
            .iter()
            .enumerate()
            .map(|(e, l)| format!("{e}\t{l:.6}\n"))
            .collect();
        save_classifier(&self.artifact(artifacts::CLASSIFIER), &spec, self.config.train.seed, &out.params)?;
        jsonl::write_atomic(&self.artifact(artifacts::PRETRAIN_LOG), log.as_bytes())
    }

    fn run_train(&self) -> Result<()> {
        let c = &self.config;
        let signals = read_signal_file(&self.artifact(artifacts::FILTERED_SIGNALS))?;
        let labels = read_pseudo_labels(&self.artifact(artifacts::PSEUDO_LABELS))?;
        let features = FeatureTable::load(&self.artifact(artifacts::FEATURES))?;
        let (spec, pretrained) = load_classifier(&self.artifact(artifacts::CLASSIFIER))?;
        let store = if c.train.init_word_embeddings_from_sr {
            Some(EmbeddingStore::load(&self.artifact(artifacts::STORE))?)
        } else {
            None
        };
        let inputs = TrainInputs {
            signals: &signals,
            pseudo_labels: &labels,
            features: &features,
            pretrained: Some(pretrained),
            word_init: store.as_ref(),
        };
        let mut trainer = Trainer::new(inputs, &spec, &c.train)?;
        let log_path = self.artifact(artifacts::TRAIN_LOG);
        let mut log_text = String::from("epoch\tmean_elbo\tseconds\n");
        for _ in 0..c.train.epochs {
            let s = trainer.run_epoch()?;
            log_text.push_str(&format!("{}\t{:.6}\t{:.3}\n", s.epoch, s.mean_elbo, s.seconds));
            jsonl::write_atomic(&log_path, log_text.as_bytes())?;
        }
        jsonl::write_atomic(&log_path, log_text.as_bytes())?;
        save_model(&self.artifact(artifacts::MODEL), &trainer.into_model())
    }

    fn run_predict(&self) -> Result<()> {
        let test = self.test_corpus()?;
        let model = load_model(&self.artifact(artifacts::MODEL))?;
        let features = FeatureTable::load(&self.artifact(artifacts::FEATURES))?;
        let ids: Vec<&str> = test.documents.iter().map(|d| d.id.as_str()).collect();
        let preds = predict_ids(&ids, &features, &model.spec, &model.params.classifier)?;
        let records: Vec<PredictionRecord> = ids
            .iter()
            .zip(preds)
            .map(|(id, c)| PredictionRecord {
                doc_id: id.to_string(),
                class_index: c,
                label: test.schema.class_name(c),
            })
            .collect();
        jsonl::write_records(&self.artifact(artifacts::PREDICTIONS), &records)
    }

    fn run_eval(&self) -> Result<()> {
        let test = self.test_corpus()?;
        let golds = test
            .golds()
            .ok_or_else(|| Error::Precondition("every test document needs a gold label for evaluation".into()))?;
        let preds = read_predictions(&self.artifact(artifacts::PREDICTIONS))?;
        let by_id: HashMap<&str, usize> = preds.iter().map(|p| (p.doc_id.as_str(), p.class_index)).collect();
        let pred_list = test
            .documents
            .iter()
            .map(|d| {
                by_id
                    .get(d.id.as_str())
                    .copied()
                    .ok_or_else(|| Error::validation(format!("no prediction for test document {:?}", d.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        let m = score(&pred_list, &golds, test.schema.num_classes())?;
        log::info!("micro F1 {:.4}, macro F1 {:.4}", m.micro_f1, m.macro_f1);
        let mut bytes = serde_json::to_vec_pretty(&m).map_err(|e| Error::validation(e.to_string()))?;
        bytes.push(b'\n');
        jsonl::write_atomic(&self.artifact(artifacts::METRICS), &bytes)?;
        jsonl::write_records(
            &self.artifact(artifacts::RUN),
            &[RunRecord {
                micro_f1: m.micro_f1,
                macro_f1: m.macro_f1,
            }],
        )?;
        let row = ReportRow {
            name: "test".into(),
            summary: aggregate_runs(std::slice::from_ref(&m))?,
        };
        metrics::write_report(
            &self.artifact(artifacts::REPORT_TXT),
            &self.artifact(artifacts::REPORT_JSONL),
            &[row],
        )
    }

    pub fn read_metrics(&self) -> Result<Metrics> {
        let path = self.artifact(artifacts::METRICS);
        let bytes = fs::read(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    jsonl::read_records(path)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    Ok(())
}

/// Store path helper re-exported for callers that inspect the index file.
pub fn store_index_path(work_dir: &Path) -> PathBuf {
    embedding::index_path(&work_dir.join(artifacts::STORE))
}
