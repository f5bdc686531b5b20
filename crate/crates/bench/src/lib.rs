//! Fixture builders shared by the benchmarks.

use clozeclass::model::{ClassifierSpec, DocFeatures, FeatureTable};
use clozeclass::{PseudoLabel, SignalSet, SignalSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_features(n: usize, dim: usize, max_len: usize, seed: u64) -> FeatureTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = FeatureTable::new(dim, max_len);
    for i in 0..n {
        let len = rng.gen_range(1..=max_len);
        let rows: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        table
            .insert(format!("d{i}"), DocFeatures::from_vectors(&rows, dim, max_len).unwrap())
            .unwrap();
    }
    table
}

/// Signal sets over a vocabulary of `vocab` words, each document drawing `per_doc` of them.
pub fn random_signals(n: usize, vocab: usize, per_doc: usize, seed: u64) -> Vec<SignalSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut words: Vec<(String, Option<f64>)> = Vec::with_capacity(per_doc);
            while words.len() < per_doc.min(vocab) {
                let w = format!("w{}", rng.gen_range(0..vocab));
                if !words.iter().any(|(x, _)| *x == w) {
                    words.push((w, None));
                }
            }
            SignalSet {
                doc_id: format!("d{i}"),
                source: SignalSource::Mlm,
                words,
            }
        })
        .collect()
}

pub fn random_pseudo_labels(n: usize, classes: usize, seed: u64) -> Vec<PseudoLabel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| PseudoLabel {
            doc_id: format!("d{i}"),
            class_index: rng.gen_range(0..classes),
            similarity: rng.gen_range(0.6..1.0),
        })
        .collect()
}

pub fn random_params(spec: &ClassifierSpec, seed: u64) -> Vec<f64> {
    spec.init_params(&mut ChaCha8Rng::seed_from_u64(seed))
}
