use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::embedding::ByteReader;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::service::Embedding;

const FEATURES_MAGIC: &[u8; 8] = b"DOCFEAT1";

/// Token-embedding sequence of one document, zero-padded to a fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct DocFeatures {
    rows: Array2<f64>,
    len: usize,
}

impl DocFeatures {
    /// Truncates `vectors` to `max_len` rows and pads with zeros.
    pub fn from_vectors(vectors: &[Vec<f64>], dim: usize, max_len: usize) -> Result<Self> {
        let len = vectors.len().min(max_len);
        let mut rows = Array2::zeros((max_len, dim));
        for (i, v) in vectors.iter().take(len).enumerate() {
            if v.len() != dim {
                return Err(Error::validation(format!(
                    "token vector of length {} where {dim} was expected",
                    v.len()
                )));
            }
            rows.row_mut(i).iter_mut().zip(v).for_each(|(r, x)| *r = *x);
        }
        Ok(DocFeatures { rows, len })
    }

    pub fn from_embedding(emb: &Embedding, dim: usize, max_len: usize) -> Result<Self> {
        DocFeatures::from_vectors(&emb.vectors, dim, max_len)
    }

    /// True (unpadded) length.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn max_len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let dim = self.dim();
        &self.rows.as_slice().expect("standard layout")[i * dim..(i + 1) * dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        self.rows.as_slice().expect("standard layout")
    }
}

/// Features for a set of documents, keyed by id, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    max_len: usize,
    ids: Vec<String>,
    features: Vec<DocFeatures>,
    index: HashMap<String, usize>,
}

impl FeatureTable {
    pub fn new(dim: usize, max_len: usize) -> Self {
        FeatureTable {
            dim,
            max_len,
            ids: Vec::new(),
            features: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, f: DocFeatures) -> Result<()> {
        if f.dim() != self.dim || f.max_len() != self.max_len {
            return Err(Error::validation("feature shape does not match table"));
        }
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(Error::validation(format!("duplicate features for {id:?}")));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.features.push(f);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&DocFeatures> {
        self.index.get(id).map(|&i| &self.features[i])
    }

    pub fn require(&self, id: &str) -> Result<&DocFeatures> {
        self.get(id)
            .ok_or_else(|| Error::Precondition(format!("no features for document {id:?}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DocFeatures)> {
        self.ids.iter().map(String::as_str).zip(&self.features)
    }

    /// Binary layout: magic, dim, max_len, count (u32 each), then per document a
    /// length-prefixed id, the true length (u32) and `len * dim` little-endian f32.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(FEATURES_MAGIC);
        for n in [self.dim, self.max_len, self.ids.len()] {
            buf.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for (id, f) in self.iter() {
            buf.extend_from_slice(&(id.len() as u32).to_le_bytes());
            buf.extend_from_slice(id.as_bytes());
            buf.extend_from_slice(&(f.len() as u32).to_le_bytes());
            for &x in &f.as_flat()[..f.len() * self.dim] {
                buf.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        jsonl::write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let corrupt = || Error::validation(format!("{}: corrupt feature file", path.display()));
        let mut r = ByteReader::new(&bytes);
        if r.take(8).ok_or_else(corrupt)? != FEATURES_MAGIC {
            return Err(corrupt());
        }
        let dim = r.u32().ok_or_else(corrupt)? as usize;
        let max_len = r.u32().ok_or_else(corrupt)? as usize;
        let n = r.u32().ok_or_else(corrupt)? as usize;
        let mut table = FeatureTable::new(dim, max_len);
        for _ in 0..n {
            let id_len = r.u32().ok_or_else(corrupt)? as usize;
            let id = std::str::from_utf8(r.take(id_len).ok_or_else(corrupt)?)
                .map_err(|_| corrupt())?
                .to_string();
            let len = r.u32().ok_or_else(corrupt)? as usize;
            if len > max_len {
                return Err(corrupt());
            }
            let vectors = (0..len)
                .map(|_| {
                    (0..dim)
                        .map(|_| r.f32().map(f64::from))
                        .collect::<Option<Vec<f64>>>()
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(corrupt)?;
            table.insert(id, DocFeatures::from_vectors(&vectors, dim, max_len)?)?;
        }
        if !r.is_done() {
            return Err(corrupt());
        }
        Ok(table)
    }
}
