use std::collections::{BTreeMap, HashMap};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::SignalSet;

/// Exponent applied to unigram counts for the noise distribution.
pub const NOISE_EXPONENT: f64 = 0.75;

/// Signal words that survived filtering, with their occurrence counts and the
/// noise distribution used for negative sampling.
#[derive(Debug, Clone)]
pub struct SignalVocab {
    words: Vec<String>,
    counts: Vec<u64>,
    weights: Vec<f64>,
    index: HashMap<String, usize>,
    sampler: Option<WeightedIndex<f64>>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct VocabRecord {
    pub words: Vec<String>,
    pub counts: Vec<u64>,
}

impl PartialEq for SignalVocab {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words && self.counts == other.counts
    }
}

impl SignalVocab {
    pub fn from_counts(words: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if words.len() != counts.len() {
            return Err(Error::validation("vocabulary words and counts differ in length"));
        }
        if words.is_empty() {
            return Err(Error::Precondition("signal vocabulary is empty".into()));
        }
        if counts.contains(&0) {
            return Err(Error::validation("vocabulary counts must be at least 1"));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::validation(format!("duplicate vocabulary word {w:?}")));
            }
        }
        let raw: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(NOISE_EXPONENT)).collect();
        let z: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / z).collect();
        let sampler = if words.len() >= 2 {
            Some(WeightedIndex::new(&raw).map_err(|e| Error::validation(e.to_string()))?)
        } else {
            None
        };
        Ok(SignalVocab {
            words,
            counts,
            weights,
            index,
            sampler,
        })
    }

    /// Vocabulary of every word in `sets`, sorted, counted once per signal set.
    pub fn from_signal_sets(sets: &[SignalSet]) -> Result<Self> {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for s in sets {
            for w in s.word_list() {
                *counts.entry(w).or_insert(0) += 1;
            }
        }
        let (words, counts): (Vec<String>, Vec<u64>) =
            counts.into_iter().map(|(w, c)| (w.to_string(), c)).unzip();
        SignalVocab::from_counts(words, counts)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Noise probabilities, proportional to `count^0.75`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub(crate) fn record(&self) -> VocabRecord {
        VocabRecord {
            words: self.words.clone(),
            counts: self.counts.clone(),
        }
    }
}

/// Draws `n` noise words i.i.d., redrawing whenever the draw equals `exclude`.
pub fn sample_negatives<R: Rng + ?Sized>(
    vocab: &SignalVocab,
    n: usize,
    exclude: Option<usize>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let sampler = vocab
        .sampler
        .as_ref()
        .ok_or(Error::CannotSample(vocab.len()))?;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let i = sampler.sample(rng);
        if Some(i) != exclude {
            out.push(i);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vocab(counts: &[u64]) -> SignalVocab {
        let words = (0..counts.len()).map(|i| format!("w{i}")).collect();
        SignalVocab::from_counts(words, counts.to_vec()).unwrap()
    }

    #[test]
    fn weights_normalize() {
        let v = vocab(&[1, 5, 17, 3]);
        assert!((v.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exclusion_holds() {
        let v = vocab(&[3, 1, 2, 50, 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = sample_negatives(&v, 100_000, Some(3), &mut rng).unwrap();
        assert_eq!(draws.len(), 100_000);
        assert!(!draws.contains(&3));
    }

    #[test]
    fn exact_count_and_determinism() {
        let v = vocab(&[3, 1, 2]);
        let a = sample_negatives(&v, 10, Some(0), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_negatives(&v, 10, Some(0), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a, b);
    }

    #[test]
    fn singleton_vocab_cannot_sample() {
        let v = vocab(&[4]);
        assert!(matches!(
            sample_negatives(&v, 1, None, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::CannotSample(1))
        ));
    }

    #[test]
    fn set_level_counts() {
        use crate::signals::SignalSource;
        let s = |id: &str, ws: &[&str]| SignalSet {
            doc_id: id.into(),
            source: SignalSource::Mlm,
            words: ws.iter().map(|w| (w.to_string(), None)).collect(),
        };
        let v = SignalVocab::from_signal_sets(&[s("a", &["x", "y"]), s("b", &["y"])]).unwrap();
        assert_eq!(v.words(), ["x", "y"]);
        assert_eq!(v.counts(), [1, 2]);
    }
}
