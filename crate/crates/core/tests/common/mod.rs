//! Independent oracles and random instance generators shared by the test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use clozeclass::model::{DocExample, DocFeatures, ModelParams, WordSample};
use clozeclass::{EmbeddingStore, LabelSchema, PseudoLabel, SignalSet, SignalSource};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn signal_set(id: &str, words: &[String]) -> SignalSet {
    SignalSet {
        doc_id: id.to_string(),
        source: SignalSource::Mlm,
        words: words.iter().map(|w| (w.clone(), None)).collect(),
    }
}

/// Random corpus of signal sets over `w0..w{n_words}` and pseudo labels on a random subset.
pub fn random_labeled_corpus<R: Rng>(
    rng: &mut R,
    max_docs: usize,
    max_words: usize,
    classes: usize,
) -> (Vec<SignalSet>, Vec<PseudoLabel>) {
    let n_docs = rng.gen_range(0..=max_docs);
    let n_words = rng.gen_range(1..=max_words);
    let mut sets = Vec::new();
    let mut labels = Vec::new();
    for d in 0..n_docs {
        let k = rng.gen_range(0..=n_words);
        let mut words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
        words.shuffle(rng);
        words.truncate(k);
        let id = format!("d{d}");
        sets.push(signal_set(&id, &words));
        if rng.gen_bool(0.8) {
            labels.push(PseudoLabel {
                doc_id: id,
                class_index: rng.gen_range(0..classes),
                similarity: 1.0,
            });
        }
    }
    (sets, labels)
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleCir {
    Finite(f64),
    Infinite,
}

/// Naive per-(class, word) counting straight from the definition.
pub struct CountOracle {
    pub counts: Vec<BTreeMap<String, u64>>,
    pub totals: Vec<u64>,
}

impl CountOracle {
    pub fn new(sets: &[SignalSet], labels: &[PseudoLabel], classes: usize) -> Self {
        let vocab: BTreeSet<String> = sets.iter().flat_map(|s| s.words.iter().map(|(w, _)| w.clone())).collect();
        let mut counts = vec![BTreeMap::new(); classes];
        let mut totals = vec![0; classes];
        for c in 0..classes {
            for w in &vocab {
                let mut n = 0u64;
                for l in labels.iter().filter(|l| l.class_index == c) {
                    let set = sets.iter().find(|s| s.doc_id == l.doc_id).unwrap();
                    if set.words.iter().any(|(x, _)| x == w) {
                        n += 1;
                    }
                }
                if n > 0 {
                    counts[c].insert(w.clone(), n);
                }
                totals[c] += n;
            }
        }
        CountOracle { counts, totals }
    }

    pub fn cii(&self, c: usize, w: &str) -> f64 {
        if self.totals[c] == 0 {
            return 0.0;
        }
        *self.counts[c].get(w).unwrap_or(&0) as f64 / self.totals[c] as f64
    }

    pub fn words(&self) -> BTreeSet<String> {
        self.counts.iter().flat_map(|m| m.keys().cloned()).collect()
    }

    /// Max over second max by sorting, `None` when the word never occurs.
    pub fn cir(&self, w: &str) -> Option<OracleCir> {
        let mut v: Vec<f64> = (0..self.totals.len()).map(|c| self.cii(c, w)).collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if v[0] == 0.0 {
            None
        } else if v[1] == 0.0 {
            Some(OracleCir::Infinite)
        } else {
            Some(OracleCir::Finite(v[0] / v[1]))
        }
    }
}

/// Store whose entries are the given vectors, with fixed model metadata.
pub fn store_from(vectors: &BTreeMap<String, Vec<f64>>, dim: usize) -> EmbeddingStore {
    EmbeddingStore::from_vectors(dim, vectors.iter().map(|(w, v)| (w.clone(), v.clone()))).unwrap()
}

pub fn naive_cosine(u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    dot / (nu.sqrt() * nv.sqrt())
}

fn naive_mean(words: &[String], vectors: &BTreeMap<String, Vec<f64>>, dim: usize) -> Option<Vec<f64>> {
    let found: Vec<&Vec<f64>> = words.iter().filter_map(|w| vectors.get(w)).collect();
    if found.is_empty() {
        return None;
    }
    let mut m = vec![0.0; dim];
    for v in &found {
        for i in 0..dim {
            m[i] += v[i];
        }
    }
    Some(m.into_iter().map(|x| x / found.len() as f64).collect())
}

/// Brute force per-class cosines, or `None` if the document has no resolvable signal word.
pub fn oracle_similarities(
    set: &SignalSet,
    schema: &LabelSchema,
    vectors: &BTreeMap<String, Vec<f64>>,
    dim: usize,
) -> Option<Vec<f64>> {
    let words: Vec<String> = set.words.iter().map(|(w, _)| w.clone()).collect();
    let doc = naive_mean(&words, vectors, dim)?;
    Some(
        (0..schema.num_classes())
            .map(|c| naive_cosine(&doc, &naive_mean(schema.class_words(c), vectors, dim).unwrap()))
            .collect(),
    )
}

/// Index of the first maximum by linear scan.
pub fn oracle_argmax(xs: &[f64]) -> usize {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    xs.iter().position(|&x| x == m).unwrap()
}

pub struct SimilarityInstance {
    pub schema: LabelSchema,
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub dim: usize,
    pub sets: Vec<SignalSet>,
}

pub fn random_similarity_instance<R: Rng>(rng: &mut R) -> SimilarityInstance {
    let dim = rng.gen_range(2..=6);
    let classes = rng.gen_range(2..=4);
    let names: Vec<String> = (0..classes)
        .map(|c| {
            if rng.gen_bool(0.2) {
                format!("label{c} extra{c}")
            } else {
                format!("label{c}")
            }
        })
        .collect();
    let schema = LabelSchema::new(&names).unwrap();
    let n_words = rng.gen_range(3..=12);
    let mut vectors = BTreeMap::new();
    let rand_vec = |rng: &mut R| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    for w in schema.all_words() {
        vectors.insert(w.to_string(), rand_vec(rng));
    }
    for i in 0..n_words {
        vectors.insert(format!("s{i}"), rand_vec(rng));
    }
    let n_docs = rng.gen_range(1..=15);
    let sets = (0..n_docs)
        .map(|d| {
            let k = rng.gen_range(0..=5);
            // s{n_words} and beyond are unresolvable
            let words: Vec<String> = (0..k).map(|_| format!("s{}", rng.gen_range(0..n_words + 2))).collect();
            let mut uniq = Vec::new();
            for w in words {
                if !uniq.contains(&w) {
                    uniq.push(w);
                }
            }
            signal_set(&format!("d{d}"), &uniq)
        })
        .collect();
    SimilarityInstance {
        schema,
        vectors,
        dim,
        sets,
    }
}

/// Exact `ln σ(a) + Σ ln σ(-b)` written with plain exponentials.
pub fn ns_formula(v_c: &[f64], w: &[f64], negatives: &[&[f64]]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut s = (1.0 / (1.0 + (-dot(v_c, w)).exp())).ln();
    for n in negatives {
        s += (1.0 / (1.0 + dot(v_c, n).exp())).ln();
    }
    s
}

pub fn random_model_params<R: Rng>(
    rng: &mut R,
    classes: usize,
    vocab: usize,
    embed_dim: usize,
    classifier: Vec<f64>,
    scale: f64,
) -> ModelParams {
    let cat = Array2::from_shape_fn((classes, embed_dim), |_| rng.gen_range(-scale..scale));
    let words = Array2::from_shape_fn((vocab, embed_dim), |_| rng.gen_range(-scale..scale));
    ModelParams::new(cat, words, classifier)
}

pub fn random_doc<R: Rng>(rng: &mut R, dim: usize, max_len: usize) -> DocFeatures {
    let len = rng.gen_range(1..=max_len);
    let rows: Vec<Vec<f64>> = (0..len)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    DocFeatures::from_vectors(&rows, dim, max_len).unwrap()
}

pub fn random_batch<'a, R: Rng>(rng: &mut R, docs: &'a [DocFeatures], vocab: usize) -> Vec<DocExample<'a>> {
    docs.iter()
        .map(|features| DocExample {
            features,
            samples: (0..rng.gen_range(1..=3))
                .map(|_| {
                    let word = rng.gen_range(0..vocab);
                    let negatives = (0..rng.gen_range(1..=3))
                        .map(|_| loop {
                            let n = rng.gen_range(0..vocab);
                            if n != word {
                                break n;
                            }
                        })
                        .collect();
                    WordSample { word, negatives }
                })
                .collect(),
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Confusion-matrix metrics: (micro F1, macro F1, per-class f1).
pub fn oracle_scores(preds: &[usize], golds: &[usize], classes: usize) -> (f64, f64, Vec<f64>) {
    let mut cm = vec![vec![0u64; classes]; classes];
    for (&p, &g) in preds.iter().zip(golds) {
        cm[g][p] += 1;
    }
    let f1 = |tp: u64, fp: u64, fn_: u64| {
        let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    };
    let mut per = Vec::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for c in 0..classes {
        let tp = cm[c][c];
        let fp: u64 = (0..classes).filter(|&g| g != c).map(|g| cm[g][c]).sum();
        let fn_: u64 = (0..classes).filter(|&p| p != c).map(|p| cm[c][p]).sum();
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        per.push(f1(tp, fp, fn_));
    }
    let macro_f1 = per.iter().sum::<f64>() / classes as f64;
    (f1(tp_all, fp_all, fn_all), macro_f1, per)
}
