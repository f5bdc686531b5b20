//! Weakly supervised text classification from label names.
//!
//! A masked language model fills a cloze prompt appended to each document;
//! its predictions are the document's signal words. Signal words are
//! embedded, documents are pseudo-labeled by similarity to the label names,
//! class-indiscriminative words are filtered out, and a document classifier
//! is trained jointly with a latent-class word model on what remains.

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod filter;
pub mod jsonl;
pub mod metrics;
pub mod model;
mod parallel;
pub mod pipeline;
pub mod pseudo;
pub mod service;
pub mod signals;
pub mod synthetic;

pub use corpus::{load_corpus, load_label_schema, Corpus, Document, LabelSchema};
pub use embedding::{cosine, phrase_sr, EmbeddingStore, StoreEntry};
pub use error::{Error, Result};
pub use filter::{compute_cii, compute_cir, filter_signals, CiiTable, Cir, CirEntry, CirTable};
pub use metrics::{aggregate_runs, score, Metrics};
pub use model::{ClassifierSpec, DocFeatures, FeatureTable, ModelParams, SignalVocab, TrainConfig, TrainedModel};
pub use pipeline::{Pipeline, PipelineConfig, Services, Stage, StageStatus};
pub use pseudo::{assign_pseudo_labels, predict_by_similarity, PseudoLabel};
pub use service::{Embedding, EmbeddingService, MaskFillService, PosTagger, Prediction, ServiceInfo};
pub use signals::{SignalSet, SignalSource};
