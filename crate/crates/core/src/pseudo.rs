//! Threshold-gated pseudo labels from label/signal cosine similarity, and the
//! similarity-only baseline predictor.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSchema;
use crate::embedding::{cosine, phrase_sr, EmbeddingStore};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::signals::SignalSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub doc_id: String,
    #[serde(rename = "class")]
    pub class_index: usize,
    pub similarity: f64,
}

/// Mean static representation of a document's signal words.
pub fn doc_signal_vector(signals: &SignalSet, store: &EmbeddingStore) -> Result<Vec<f64>> {
    if signals.is_empty() {
        return Err(Error::Precondition(format!(
            "document {:?} has no signal words",
            signals.doc_id
        )));
    }
    let words: Vec<&str> = signals.word_list().collect();
    phrase_sr(&words, store)
}

/// Representation of every class surface name, in class order.
pub fn label_vectors(schema: &LabelSchema, store: &EmbeddingStore) -> Result<Vec<Vec<f64>>> {
    schema
        .classes()
        .iter()
        .map(|words| phrase_sr(words, store))
        .collect()
}

/// Highest-similarity class, lowest index on exact ties.
pub fn best_class(similarities: &[f64]) -> (usize, f64) {
    let mut best = (0, similarities[0]);
    for (c, &s) in similarities.iter().enumerate().skip(1) {
        if s > best.1 {
            best = (c, s);
        }
    }
    best
}

fn doc_similarities(signals: &SignalSet, store: &EmbeddingStore, labels: &[Vec<f64>]) -> Option<Vec<f64>> {
    let v = match doc_signal_vector(signals, store) {
        Ok(v) => v,
        Err(e) => {
            log::warn!("document {:?} left unlabeled: {e}", signals.doc_id);
            return None;
        }
    };
    match labels.iter().map(|l| cosine(&v, l)).collect::<Result<Vec<_>>>() {
        Ok(sims) => Some(sims),
        Err(e) => {
            log::warn!("document {:?} left unlabeled: {e}", signals.doc_id);
            None
        }
    }
}

pub fn assign_pseudo_labels(
    signal_sets: &[SignalSet],
    store: &EmbeddingStore,
    schema: &LabelSchema,
    gamma: f64,
) -> Result<Vec<PseudoLabel>> {
    if !(-1.0..=1.0).contains(&gamma) {
        return Err(Error::validation(format!("gamma {gamma} outside [-1, 1]")));
    }
    let labels = label_vectors(schema, store)?;
    let mut out = Vec::new();
    for set in signal_sets {
        if set.is_empty() {
            continue;
        }
        let Some(sims) = doc_similarities(set, store, &labels) else {
            continue;
        };
        let (class_index, similarity) = best_class(&sims);
        if similarity > gamma {
            out.push(PseudoLabel {
                doc_id: set.doc_id.clone(),
                class_index,
                similarity,
            });
        }
    }
    Ok(out)
}

/// Argmax class per document without a threshold; documents without usable
/// signals default to class 0.
pub fn predict_by_similarity(
    signal_sets: &[SignalSet],
    store: &EmbeddingStore,
    schema: &LabelSchema,
) -> Result<Vec<usize>> {
    let labels = label_vectors(schema, store)?;
    Ok(signal_sets
        .iter()
        .map(|set| {
            if set.is_empty() {
                log::warn!("document {:?} has no signals; predicting class 0", set.doc_id);
                return 0;
            }
            doc_similarities(set, store, &labels)
                .map(|s| best_class(&s).0)
                .unwrap_or(0)
        })
        .collect())
}

pub fn read_pseudo_labels(path: &Path) -> Result<Vec<PseudoLabel>> {
    jsonl::read_records(path)
}

pub fn write_pseudo_labels(path: &Path, labels: &[PseudoLabel]) -> Result<()> {
    jsonl::write_records(path, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::SignalSource;

    fn set(id: &str, words: &[&str]) -> SignalSet {
        SignalSet {
            doc_id: id.into(),
            source: SignalSource::Mlm,
            words: words.iter().map(|w| (w.to_string(), Some(0.1))).collect(),
        }
    }

    fn planted() -> (EmbeddingStore, LabelSchema) {
        let store = EmbeddingStore::from_vectors(
            3,
            [
                ("politics", vec![1.0, 0.0, 0.0]),
                ("sports", vec![0.0, 1.0, 0.0]),
                ("business", vec![0.0, 0.0, 1.0]),
                ("tennis", vec![0.0, 2.0, 0.0]),
                ("wimbledon", vec![0.0, 0.5, 0.0]),
                ("market", vec![0.2, 0.0, 0.3]),
            ],
        )
        .unwrap();
        (store, LabelSchema::new(&["politics", "sports", "business"]).unwrap())
    }

    #[test]
    fn signal_vector_means() {
        let (store, _) = planted();
        assert_eq!(doc_signal_vector(&set("d", &["tennis"]), &store).unwrap(), vec![0.0, 2.0, 0.0]);
        assert_eq!(
            doc_signal_vector(&set("d", &["tennis", "market"]), &store).unwrap(),
            vec![0.1, 1.0, 0.15]
        );
        assert!(matches!(
            doc_signal_vector(&set("d", &[]), &store),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn planted_identity_similarity() {
        let (store, schema) = planted();
        let sets = [set("d1", &["tennis", "wimbledon"])];
        let labels = assign_pseudo_labels(&sets, &store, &schema, 0.99).unwrap();
        assert_eq!(labels.len(), 1);
        assert_eq!(labels[0].class_index, 1);
        assert!((labels[0].similarity - 1.0).abs() < 1e-12);
        assert_eq!(predict_by_similarity(&sets, &store, &schema).unwrap(), vec![1]);
    }

    #[test]
    fn threshold_is_strict() {
        // cos = 0.59 exactly against "politics"
        let s = 0.59f64;
        let store = EmbeddingStore::from_vectors(
            2,
            [
                ("politics", vec![1.0, 0.0]),
                ("sports", vec![-1.0, 0.0]),
                ("w", vec![s, (1.0 - s * s).sqrt()]),
            ],
        )
        .unwrap();
        let schema = LabelSchema::new(&["politics", "sports"]).unwrap();
        let sets = [set("d", &["w"])];
        assert!(assign_pseudo_labels(&sets, &store, &schema, 0.6).unwrap().is_empty());
        assert_eq!(assign_pseudo_labels(&sets, &store, &schema, 0.58).unwrap().len(), 1);
    }

    #[test]
    fn ties_go_to_lowest_class() {
        let store = EmbeddingStore::from_vectors(
            2,
            [("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0]), ("w", vec![1.0, 1.0])],
        )
        .unwrap();
        let schema = LabelSchema::new(&["a", "b"]).unwrap();
        assert_eq!(predict_by_similarity(&[set("d", &["w"])], &store, &schema).unwrap(), vec![0]);
    }

    #[test]
    fn unresolvable_documents_skipped_or_defaulted() {
        let (store, schema) = planted();
        let sets = [set("d1", &["nothing"]), set("d2", &[]), set("d3", &["wimbledon"])];
        let labels = assign_pseudo_labels(&sets, &store, &schema, 0.0).unwrap();
        assert_eq!(labels.len(), 1);
        assert_eq!(labels[0].doc_id, "d3");
        assert_eq!(predict_by_similarity(&sets, &store, &schema).unwrap(), vec![0, 0, 1]);
    }

    #[test]
    fn gamma_out_of_range() {
        let (store, schema) = planted();
        assert!(assign_pseudo_labels(&[], &store, &schema, 1.5).is_err());
    }
}
