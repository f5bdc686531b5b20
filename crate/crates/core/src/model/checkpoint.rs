//! Versioned binary checkpoints.
//!
//! Layout: 8-byte magic, format version (u32), header length (u32), a JSON
//! header (config echo, vocabulary, classifier spec, shapes), then the
//! category vectors, word embeddings and classifier parameters as
//! little-endian f64 in that order.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::classifier::ClassifierSpec;
use super::objective::ModelParams;
use super::train::{TrainConfig, TrainedModel};
use super::vocab::{SignalVocab, VocabRecord};
use crate::embedding::ByteReader;
use crate::error::{Error, Result};
use crate::jsonl;

const MAGIC: &[u8; 8] = b"CLZCKPT\0";
const VERSION: u32 = 1;

const CLASSIFIER_MAGIC: &[u8; 8] = b"CLZCLSF\0";

#[derive(Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    vocab: VocabRecord,
    spec: ClassifierSpec,
    classes: usize,
    embed_dim: usize,
    classifier_params: usize,
}

fn push_f64s<'a>(buf: &mut Vec<u8>, xs: impl IntoIterator<Item = &'a f64>) {
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn header_bytes<T: Serialize>(magic: &[u8; 8], header: &T) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(header).map_err(|e| Error::validation(e.to_string()))?;
    let mut buf = Vec::with_capacity(16 + json.len());
    buf.extend_from_slice(magic);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    Ok(buf)
}

fn read_header<'a, T: for<'de> Deserialize<'de>>(
    bytes: &'a [u8],
    magic: &[u8; 8],
    path: &Path,
) -> Result<(T, ByteReader<'a>)> {
    let corrupt = |m: &str| Error::validation(format!("{}: {m}", path.display()));
    let mut r = ByteReader::new(bytes);
    if r.take(8).ok_or_else(|| corrupt("truncated"))? != magic {
        return Err(corrupt("not a checkpoint of the expected kind"));
    }
    let version = r.u32().ok_or_else(|| corrupt("truncated"))?;
    if version != VERSION {
        return Err(corrupt(&format!("unsupported checkpoint version {version}")));
    }
    let len = r.u32().ok_or_else(|| corrupt("truncated"))? as usize;
    let header = serde_json::from_slice(r.take(len).ok_or_else(|| corrupt("truncated header"))?)
        .map_err(|e| corrupt(&format!("bad header: {e}")))?;
    Ok((header, r))
}

fn read_f64s(r: &mut ByteReader<'_>, n: usize, path: &Path) -> Result<Vec<f64>> {
    (0..n)
        .map(|_| r.f64())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::validation(format!("{}: truncated parameter block", path.display())))
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    let p = &model.params;
    let header = Header {
        config: model.config.clone(),
        vocab: model.vocab.record(),
        spec: model.spec.clone(),
        classes: p.num_classes(),
        embed_dim: p.embed_dim(),
        classifier_params: p.classifier.len(),
    };
    let mut buf = header_bytes(MAGIC, &header)?;
    push_f64s(&mut buf, p.category_vectors.iter());
    push_f64s(&mut buf, p.word_embeddings.iter());
    push_f64s(&mut buf, &p.classifier);
    jsonl::write_atomic(path, &buf)
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let (h, mut r): (Header, _) = read_header(&bytes, MAGIC, path)?;
    let vocab = SignalVocab::from_counts(h.vocab.words, h.vocab.counts)?;
    let d = h.embed_dim;
    let shape_err = |e: ndarray::ShapeError| Error::validation(e.to_string());
    let category = Array2::from_shape_vec((h.classes, d), read_f64s(&mut r, h.classes * d, path)?).map_err(shape_err)?;
    let words =
        Array2::from_shape_vec((vocab.len(), d), read_f64s(&mut r, vocab.len() * d, path)?).map_err(shape_err)?;
    let classifier = read_f64s(&mut r, h.classifier_params, path)?;
    if !r.is_done() || classifier.len() != h.spec.num_params() {
        return Err(Error::validation(format!("{}: inconsistent checkpoint", path.display())));
    }
    Ok(TrainedModel {
        config: h.config,
        vocab,
        spec: h.spec,
        params: ModelParams::new(category, words, classifier),
    })
}

#[derive(Serialize, Deserialize)]
struct ClassifierHeader {
    spec: ClassifierSpec,
    seed: u64,
    params: usize,
}

/// Classifier-only file written after pre-training.
pub fn save_classifier(path: &Path, spec: &ClassifierSpec, seed: u64, params: &[f64]) -> Result<()> {
    let mut buf = header_bytes(
        CLASSIFIER_MAGIC,
        &ClassifierHeader {
            spec: spec.clone(),
            seed,
            params: params.len(),
        },
    )?;
    push_f64s(&mut buf, params);
    jsonl::write_atomic(path, &buf)
}

pub fn load_classifier(path: &Path) -> Result<(ClassifierSpec, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let (h, mut r): (ClassifierHeader, _) = read_header(&bytes, CLASSIFIER_MAGIC, path)?;
    let params = read_f64s(&mut r, h.params, path)?;
    if params.len() != h.spec.num_params() {
        return Err(Error::validation(format!("{}: parameter count mismatch", path.display())));
    }
    Ok((h.spec, params))
}
