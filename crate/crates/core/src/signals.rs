//! Signal words: masked-LM predictions for a cloze prompt, or nouns extracted
//! from POS-annotated text.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::jsonl::{self, Appender};
use crate::parallel::map_ordered;
use crate::service::{MaskFillService, Prediction};

pub const MASK: &str = "[MASK]";
pub const DEFAULT_TEMPLATE: &str = "This article is talking about [MASK].";

/// Tags treated as noun or proper noun (Penn Treebank and Universal POS).
pub const DEFAULT_NOUN_TAGS: &[&str] = &["NN", "NNS", "NNP", "NNPS", "NOUN", "PROPN"];

/// Raw predictions requested per signal slot, so that normalization rejects can be backfilled.
pub const CANDIDATE_FACTOR: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalSource {
    Mlm,
    Doc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSet {
    pub doc_id: String,
    pub source: SignalSource,
    pub words: Vec<(String, Option<f64>)>,
}

impl SignalSet {
    pub fn empty(doc_id: impl Into<String>, source: SignalSource) -> Self {
        SignalSet {
            doc_id: doc_id.into(),
            source,
            words: Vec::new(),
        }
    }

    pub fn word_list(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|(w, _)| w.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    suffix: String,
}

impl PromptTemplate {
    pub fn new(suffix: impl Into<String>) -> Result<Self> {
        let suffix = suffix.into();
        let n = suffix.matches(MASK).count();
        if n != 1 {
            return Err(Error::validation(format!(
                "prompt template must contain exactly one {MASK}, found {n}: {suffix:?}"
            )));
        }
        Ok(PromptTemplate { suffix })
    }

    pub fn text(&self) -> &str {
        &self.suffix
    }

    fn word_count(&self) -> usize {
        self.suffix.split_whitespace().count()
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            suffix: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

/// Document text, terminal punctuation if missing, one space, then the template.
pub fn build_prompt(doc_text: &str, template: &PromptTemplate) -> Result<String> {
    let body = doc_text.trim_end();
    if body.trim().is_empty() {
        return Err(Error::validation("cannot build a prompt from empty text"));
    }
    let mut prompt = String::with_capacity(body.len() + template.text().len() + 2);
    prompt.push_str(body);
    if !body.ends_with(['.', '!', '?']) {
        prompt.push('.');
    }
    prompt.push(' ');
    prompt.push_str(template.text());
    Ok(prompt)
}

/// Longest prefix of `text` holding at most `max_words` whitespace-delimited words.
pub fn truncate_words(text: &str, max_words: usize) -> &str {
    let mut end = 0;
    for (count, (start, word)) in word_spans(text).enumerate() {
        if count == max_words {
            break;
        }
        end = start + word.len();
    }
    &text[..end]
}

fn word_spans(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_whitespace()
        .map(move |w| (w.as_ptr() as usize - text.as_ptr() as usize, w))
}

/// Word budget left for the document once the template and the two wrapper tokens are accounted for.
pub fn document_word_budget(max_input_tokens: usize, template: &PromptTemplate) -> usize {
    max_input_tokens.saturating_sub(template.word_count() + 2).max(1)
}

/// Lowercases a raw prediction and rejects fragments: sub-word continuations,
/// punctuation, numerals, special tokens and anything under two characters.
pub fn normalize_prediction(token: &str) -> Option<String> {
    let t = token.trim();
    if t.starts_with("##") {
        return None;
    }
    if t.starts_with('[') && t.ends_with(']') {
        return None;
    }
    if t.chars().count() < 2 {
        return None;
    }
    if !t.chars().any(char::is_alphanumeric) {
        return None;
    }
    let numeral = t.chars().any(|c| c.is_numeric())
        && t.chars().all(|c| c.is_numeric() || matches!(c, '.' | ',' | '-' | '/' | ':'));
    if numeral {
        return None;
    }
    Some(t.to_lowercase())
}

/// Top-`k` normalized, de-duplicated words from raw predictions ordered by descending score.
pub fn select_signal_words(raw: &[Prediction], k: usize) -> Vec<(String, Option<f64>)> {
    let mut ranked: Vec<&Prediction> = raw.iter().collect();
    // stable: equal scores keep service order
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(k);
    for p in ranked {
        if out.len() == k {
            break;
        }
        if let Some(w) = normalize_prediction(&p.token) {
            if seen.insert(w.clone()) {
                out.push((w, Some(p.score)));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    doc_id: String,
    template: String,
    k: usize,
    model: String,
}

/// One cached service response; raw predictions in the signal-file layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlmCacheRecord {
    pub doc_id: String,
    pub source: SignalSource,
    pub words: Vec<(String, Option<f64>)>,
    pub model: String,
    pub template: String,
    pub k: usize,
}

/// Append-only cache of raw mask-fill responses keyed by (doc id, template, k, model).
pub struct MlmCache {
    entries: HashMap<CacheKey, Vec<Prediction>>,
    appender: Option<Appender>,
}

impl MlmCache {
    pub fn in_memory() -> Self {
        MlmCache {
            entries: HashMap::new(),
            appender: None,
        }
    }

    pub fn open(path: &Path) -> Result<Self> {
        let records: Vec<MlmCacheRecord> = jsonl::read_records_if_exists(path)?;
        let mut entries = HashMap::new();
        for r in records {
            let key = CacheKey {
                doc_id: r.doc_id,
                template: r.template,
                k: r.k,
                model: r.model,
            };
            let preds = r
                .words
                .into_iter()
                .map(|(token, score)| Prediction {
                    token,
                    score: score.unwrap_or(0.0),
                })
                .collect();
            entries.insert(key, preds);
        }
        Ok(MlmCache {
            entries,
            appender: Some(Appender::open(path)?),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn get(&self, key: &CacheKey) -> Option<&Vec<Prediction>> {
        self.entries.get(key)
    }

    fn insert(&mut self, key: CacheKey, preds: Vec<Prediction>) -> Result<()> {
        if let Some(app) = &mut self.appender {
            app.append(&MlmCacheRecord {
                doc_id: key.doc_id.clone(),
                source: SignalSource::Mlm,
                words: preds.iter().map(|p| (p.token.clone(), Some(p.score))).collect(),
                model: key.model.clone(),
                template: key.template.clone(),
                k: key.k,
            })?;
        }
        self.entries.insert(key, preds);
        Ok(())
    }
}

/// Mask-fill client: prompt construction, truncation and response caching.
/// Without a service it answers from the cache only.
pub struct MlmClient<'a> {
    service: Option<&'a dyn MaskFillService>,
    model: String,
    max_input_tokens: usize,
    template: PromptTemplate,
    cache: Mutex<MlmCache>,
}

impl<'a> MlmClient<'a> {
    pub fn new(
        service: Option<&'a dyn MaskFillService>,
        model: impl Into<String>,
        max_input_tokens: usize,
        template: PromptTemplate,
        cache: MlmCache,
    ) -> Self {
        MlmClient {
            service,
            model: model.into(),
            max_input_tokens,
            template,
            cache: Mutex::new(cache),
        }
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    pub fn prompt_for(&self, doc: &Document) -> Result<String> {
        let budget = document_word_budget(self.max_input_tokens, &self.template);
        build_prompt(truncate_words(&doc.text, budget), &self.template)
    }

    /// Raw predictions for `doc`, from the cache when present.
    pub fn raw_predictions(&self, doc: &Document, k: usize) -> Result<Vec<Prediction>> {
        let key = CacheKey {
            doc_id: doc.id.clone(),
            template: self.template.text().to_string(),
            k,
            model: self.model.clone(),
        };
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let service = self.service.ok_or_else(|| {
            Error::Transport(format!(
                "offline and no cached mask-fill response for document {:?}",
                doc.id
            ))
        })?;
        let prompt = self.prompt_for(doc)?;
        let preds = service.top_k(&prompt, k * CANDIDATE_FACTOR)?;
        self.cache.lock().unwrap().insert(key, preds.clone())?;
        Ok(preds)
    }
}

pub fn acquire_mlm_signals(doc: &Document, client: &MlmClient<'_>, k: usize) -> Result<SignalSet> {
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    let raw = client.raw_predictions(doc, k)?;
    let words = select_signal_words(&raw, k);
    if words.is_empty() {
        log::warn!("document {:?}: no usable mask-fill prediction", doc.id);
    }
    Ok(SignalSet {
        doc_id: doc.id.clone(),
        source: SignalSource::Mlm,
        words,
    })
}

/// Acquires signals for every document with bounded concurrency; output keeps document order.
pub fn acquire_all_mlm(
    docs: &[Document],
    client: &MlmClient<'_>,
    k: usize,
    parallelism: usize,
) -> Result<Vec<SignalSet>> {
    map_ordered(docs, parallelism, |d| acquire_mlm_signals(d, client, k))
        .into_iter()
        .collect()
}

pub fn is_noun_tag(tag: &str, noun_tags: &[&str]) -> bool {
    noun_tags.contains(&tag)
}

/// Nouns and proper nouns of a POS-annotated document, lowercased, first occurrence order.
pub fn extract_doc_signals(doc: &Document) -> Result<SignalSet> {
    extract_doc_signals_with(doc, DEFAULT_NOUN_TAGS)
}

pub fn extract_doc_signals_with(doc: &Document, noun_tags: &[&str]) -> Result<SignalSet> {
    let tokens = doc.tokens.as_ref().ok_or_else(|| {
        Error::Precondition(format!(
            "document {:?} has no POS tokens; tag it with the /v1/pos endpoint first",
            doc.id
        ))
    })?;
    let mut seen = HashSet::new();
    let mut words = Vec::new();
    for (surface, pos) in tokens {
        if !is_noun_tag(pos, noun_tags) {
            continue;
        }
        let w = surface.trim().to_lowercase();
        if !w.is_empty() && seen.insert(w.clone()) {
            words.push((w, None));
        }
    }
    Ok(SignalSet {
        doc_id: doc.id.clone(),
        source: SignalSource::Doc,
        words,
    })
}

pub fn read_signal_file(path: &Path) -> Result<Vec<SignalSet>> {
    jsonl::read_records(path)
}

pub fn write_signal_file(path: &Path, sets: &[SignalSet]) -> Result<()> {
    jsonl::write_records(path, sets)
}
