//! Documents, label schemas and their on-disk formats.
//!
//! A corpus file holds one JSON object per line:
//! `{"id": "...", "text": "...", "label": 2, "tokens": [["Scientists", "NNS"], ...]}`
//! where `label` and `tokens` are optional. A schema file lists one class per
//! line; a multi-word class name is split on whitespace.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(rename = "label", default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<usize>,
    /// `(surface, part-of-speech tag)` pairs in document order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<(String, String)>>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            gold_label: None,
            tokens: None,
        }
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.gold_label = Some(label);
        self
    }

    pub fn with_tokens(mut self, tokens: Vec<(String, String)>) -> Self {
        self.tokens = Some(tokens);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSchema {
    classes: Vec<Vec<String>>,
}

impl LabelSchema {
    /// Builds a schema from class surface names; names are lowercased and split on whitespace.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let classes: Vec<Vec<String>> = names
            .iter()
            .map(|n| {
                n.as_ref()
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect::<Vec<_>>()
            })
            .filter(|words| !words.is_empty())
            .collect();
        if classes.len() < 2 {
            return Err(Error::validation(format!(
                "a label schema needs at least 2 classes, got {}",
                classes.len()
            )));
        }
        let mut seen = HashSet::new();
        for words in &classes {
            if !seen.insert(words.join(" ")) {
                return Err(Error::validation(format!(
                    "duplicate class name {:?}",
                    words.join(" ")
                )));
            }
        }
        Ok(LabelSchema { classes })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Component words of class `index`.
    pub fn class_words(&self, index: usize) -> &[String] {
        &self.classes[index]
    }

    pub fn class_name(&self, index: usize) -> String {
        self.classes[index].join(" ")
    }

    pub fn classes(&self) -> &[Vec<String>] {
        &self.classes
    }

    /// Every distinct word used by any class name.
    pub fn all_words(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().flatten().map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for words in &self.classes {
            s.push_str(&words.join(" "));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub schema: LabelSchema,
}

impl Corpus {
    /// Validates documents against the schema and corpus invariants.
    pub fn new(documents: Vec<Document>, schema: LabelSchema) -> Result<Self> {
        let mut ids = HashSet::new();
        for (i, doc) in documents.iter().enumerate() {
            validate_document(doc, &schema).map_err(|m| {
                Error::validation(format!("document #{} ({:?}): {m}", i + 1, doc.id))
            })?;
            if !ids.insert(doc.id.as_str()) {
                return Err(Error::validation(format!("duplicate document id {:?}", doc.id)));
            }
        }
        Ok(Corpus { documents, schema })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn golds(&self) -> Option<Vec<usize>> {
        self.documents.iter().map(|d| d.gold_label).collect()
    }
}

fn validate_document(doc: &Document, schema: &LabelSchema) -> std::result::Result<(), String> {
    if doc.id.is_empty() {
        return Err("empty id".into());
    }
    if doc.text.trim().is_empty() {
        return Err("text is empty or whitespace only".into());
    }
    if let Some(label) = doc.gold_label {
        if label >= schema.num_classes() {
            return Err(format!(
                "label {label} out of range for {} classes",
                schema.num_classes()
            ));
        }
    }
    if let Some(tokens) = &doc.tokens {
        if tokens.iter().any(|(surface, _)| surface.is_empty()) {
            return Err("token with empty surface".into());
        }
    }
    Ok(())
}

pub fn load_label_schema(path: &Path) -> Result<LabelSchema> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading schema {}", path.display()), e))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    LabelSchema::new(&lines).map_err(|e| match e {
        Error::Validation(m) => Error::validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Loads a corpus in file order. Validation errors cite the offending line.
pub fn load_corpus(path: &Path, schema: &LabelSchema) -> Result<Corpus> {
    let documents: Vec<Document> = jsonl::read_records(path)?;
    // Re-validate here so the message can carry the file line rather than the record index.
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let line_numbers: Vec<usize> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, _)| i + 1)
        .collect();
    let mut ids = HashSet::new();
    for (doc, line) in documents.iter().zip(&line_numbers) {
        if let Err(m) = validate_document(doc, schema) {
            return Err(Error::validation(format!("{}:{line}: {m}", path.display())));
        }
        if !ids.insert(doc.id.as_str()) {
            return Err(Error::validation(format!(
                "{}:{line}: duplicate document id {:?}",
                path.display(),
                doc.id
            )));
        }
    }
    Ok(Corpus {
        documents,
        schema: schema.clone(),
    })
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    jsonl::write_records(path, &corpus.documents)
}

pub fn write_label_schema(path: &Path, schema: &LabelSchema) -> Result<()> {
    jsonl::write_atomic(path, schema.to_text().as_bytes())
}
