//! Planted-topic corpus and mock language-model services for offline runs.
//!
//! Each class owns a disjoint topic vocabulary. A document mixes words of its
//! class topic with shared filler and the occasional off-topic word. The
//! mock embedding service places every topic word near its class direction;
//! the mock mask-fill service answers with words of the dominant topic in the
//! prompt, mixed with generic and junk tokens.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::corpus::{write_corpus, write_label_schema, Corpus, Document, LabelSchema};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::pipeline::{PathsConfig, Pipeline, PipelineConfig, Services, Stage};
use crate::service::{Embedding, EmbeddingService, MaskFillService, PosTagger, PosToken, Prediction, ServiceInfo};
use crate::signals::MASK;

const TOPICS: [(&str, [&str; 20]); 3] = [
    (
        "sports",
        [
            "sports", "tennis", "football", "soccer", "match", "tournament", "coach", "stadium", "league", "goal",
            "referee", "championship", "athlete", "racket", "wimbledon", "striker", "medal", "olympics", "pitch",
            "season",
        ],
    ),
    (
        "politics",
        [
            "politics", "election", "senate", "parliament", "minister", "vote", "campaign", "ballot", "governor",
            "policy", "congress", "diplomat", "treaty", "legislation", "candidate", "party", "president", "cabinet",
            "referendum", "embassy",
        ],
    ),
    (
        "science",
        [
            "science", "physics", "chemistry", "biology", "laboratory", "experiment", "molecule", "genome", "telescope",
            "researcher", "hypothesis", "protein", "quantum", "particle", "enzyme", "astronomy", "microscope", "neuron",
            "fossil", "galaxy",
        ],
    ),
];

const FILLER_NOUNS: [&str; 10] = [
    "people", "time", "year", "day", "week", "group", "report", "city", "world", "thing",
];

const FILLER_OTHER: [(&str, &str); 14] = [
    ("the", "DT"),
    ("a", "DT"),
    ("of", "IN"),
    ("in", "IN"),
    ("and", "CC"),
    ("with", "IN"),
    ("said", "VBD"),
    ("new", "JJ"),
    ("after", "IN"),
    ("was", "VBD"),
    ("on", "IN"),
    ("for", "IN"),
    ("major", "JJ"),
    ("today", "RB"),
];

/// Words the mock MLM emits regardless of topic; CIR filtering should drop them.
const GENERIC_PREDICTIONS: [&str; 6] = ["news", "article", "story", "something", "everything", "update"];

/// Tokens the mask-fill normalizer must reject.
const JUNK_PREDICTIONS: [&str; 6] = ["##ing", ",", "[UNK]", "1990", "a", "..."];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub train_docs: usize,
    pub test_docs: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a position holds a word of the document's topic.
    pub topic_rate: f64,
    /// Probability that a position holds a word of another topic.
    pub off_topic_rate: f64,
    pub dim: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            train_docs: 600,
            test_docs: 300,
            min_len: 20,
            max_len: 40,
            topic_rate: 0.3,
            off_topic_rate: 0.05,
            dim: 24,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub schema: LabelSchema,
    pub train: Vec<Document>,
    pub test: Vec<Document>,
}

pub fn num_classes() -> usize {
    TOPICS.len()
}

pub fn topic_words(class: usize) -> &'static [&'static str] {
    &TOPICS[class].1
}

fn make_doc<R: Rng>(id: String, label: usize, spec: &SyntheticSpec, rng: &mut R) -> Document {
    let len = rng.gen_range(spec.min_len..=spec.max_len);
    let mut tokens = Vec::with_capacity(len);
    for _ in 0..len {
        let u: f64 = rng.gen();
        let (word, pos) = if u < spec.topic_rate {
            (*TOPICS[label].1.choose(rng).unwrap(), "NN")
        } else if u < spec.topic_rate + spec.off_topic_rate {
            let other = (label + rng.gen_range(1..TOPICS.len())) % TOPICS.len();
            (*TOPICS[other].1.choose(rng).unwrap(), "NN")
        } else if rng.gen_bool(0.3) {
            (*FILLER_NOUNS.choose(rng).unwrap(), "NN")
        } else {
            *FILLER_OTHER.choose(rng).unwrap()
        };
        tokens.push((word.to_string(), pos.to_string()));
    }
    let text = format!(
        "{}.",
        tokens.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>().join(" ")
    );
    Document::new(id, text).with_label(label).with_tokens(tokens)
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    if spec.min_len == 0 || spec.min_len > spec.max_len {
        return Err(Error::validation("synthetic document length range is empty"));
    }
    if spec.topic_rate + spec.off_topic_rate > 1.0 {
        return Err(Error::validation("topic rates exceed 1"));
    }
    let names: Vec<&str> = TOPICS.iter().map(|(n, _)| *n).collect();
    let schema = LabelSchema::new(&names)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut split = |prefix: &str, n: usize| -> Vec<Document> {
        (0..n)
            .map(|i| {
                let label = rng.gen_range(0..TOPICS.len());
                make_doc(format!("{prefix}-{i:04}"), label, spec, &mut rng)
            })
            .collect()
    };
    let train = split("train", spec.train_docs);
    let test = split("test", spec.test_docs);
    Ok(SyntheticCorpus { schema, train, test })
}

fn hash_seed(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

fn gaussian_vec(seed: u64, dim: usize, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // sum of uniforms: close enough to normal for a mock
    (0..dim)
        .map(|_| scale * ((0..4).map(|_| rng.gen::<f64>()).sum::<f64>() - 2.0) * 3f64.sqrt())
        .collect()
}

fn strip_punct(token: &str) -> &str {
    token.trim_matches(|c: char| c.is_ascii_punctuation())
}

/// Mock sidecar answering all four endpoints from the planted vocabularies.
#[derive(Debug, Clone)]
pub struct MockLanguageModel {
    dim: usize,
    topic_of: HashMap<&'static str, usize>,
    known: HashMap<String, Vec<f64>>,
}

impl MockLanguageModel {
    pub const MODEL: &'static str = "mock-planted-topics";

    pub fn new(dim: usize) -> Self {
        assert!(dim >= TOPICS.len(), "mock dim must be at least the class count");
        let mut topic_of = HashMap::new();
        let mut known = HashMap::new();
        for (c, (_, words)) in TOPICS.iter().enumerate() {
            for w in words {
                topic_of.insert(*w, c);
                let mut v = gaussian_vec(hash_seed(&["word", w]), dim, 0.15);
                v[c] += 1.0;
                known.insert(w.to_string(), v);
            }
        }
        let others = FILLER_NOUNS
            .iter()
            .copied()
            .chain(FILLER_OTHER.iter().map(|(w, _)| *w))
            .chain(GENERIC_PREDICTIONS);
        for w in others {
            known.insert(w.to_string(), gaussian_vec(hash_seed(&["word", w]), dim, 0.3));
        }
        MockLanguageModel { dim, topic_of, known }
    }

    pub fn info(&self) -> ServiceInfo {
        ServiceInfo {
            model: Self::MODEL.into(),
            cased: false,
            dim: self.dim,
            layer: "last".into(),
            max_input_tokens: 512,
            noun_tags: None,
        }
    }

    /// Every word the mock can emit from mask filling, in a fixed order.
    pub fn prediction_vocabulary(&self) -> Vec<String> {
        TOPICS
            .iter()
            .flat_map(|(_, ws)| ws.iter())
            .chain(GENERIC_PREDICTIONS.iter())
            .chain(JUNK_PREDICTIONS.iter())
            .map(|w| w.to_string())
            .collect()
    }

    fn dominant_topic(&self, text: &str) -> usize {
        let mut counts = vec![0usize; TOPICS.len()];
        for tok in text.split_whitespace() {
            if let Some(&c) = self.topic_of.get(strip_punct(&tok.to_lowercase())) {
                counts[c] += 1;
            }
        }
        // lowest index wins ties, like everywhere else
        let mut best = 0;
        for c in 1..counts.len() {
            if counts[c] > counts[best] {
                best = c;
            }
        }
        best
    }

    fn ranked_candidates(&self, text: &str) -> Vec<&'static str> {
        let topic = self.dominant_topic(text);
        let mut rng = ChaCha8Rng::seed_from_u64(hash_seed(&["topk", text]));
        let mut own: Vec<&str> = TOPICS[topic].1.to_vec();
        own.shuffle(&mut rng);
        let mut generic = GENERIC_PREDICTIONS.to_vec();
        generic.shuffle(&mut rng);
        let mut off: Vec<&str> = TOPICS
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != topic)
            .flat_map(|(_, (_, ws))| ws.iter().copied())
            .collect();
        off.shuffle(&mut rng);

        let mut out = Vec::new();
        let mut own_it = own.into_iter();
        let mut generic_it = generic.into_iter();
        let mut junk_it = JUNK_PREDICTIONS.iter().copied();
        // every third slot is generic or junk, then one off-topic word per eight
        for slot in 0.. {
            let next = match slot % 8 {
                2 => generic_it.next().or_else(|| own_it.next()),
                5 => junk_it.next().or_else(|| own_it.next()),
                7 => off.pop(),
                _ => own_it.next(),
            };
            match next {
                Some(w) => out.push(w),
                None => break,
            }
        }
        out.extend(generic_it);
        out.extend(junk_it);
        out.extend(off);
        out
    }

    fn context_vector(&self, text: &str, position: usize, word: &str) -> Option<Vec<f64>> {
        let base = self.known.get(word)?;
        let pos = position.to_string();
        let noise = gaussian_vec(hash_seed(&["ctx", text, &pos]), self.dim, 0.05);
        Some(base.iter().zip(noise).map(|(b, n)| b + n).collect())
    }
}

impl MaskFillService for MockLanguageModel {
    fn info(&self) -> Result<ServiceInfo> {
        Ok(MockLanguageModel::info(self))
    }

    fn top_k(&self, text: &str, k: usize) -> Result<Vec<Prediction>> {
        if text.matches(MASK).count() != 1 {
            return Err(Error::validation("text must contain exactly one mask placeholder"));
        }
        if k == 0 {
            return Err(Error::validation("k must be at least 1"));
        }
        let cands = self.ranked_candidates(text);
        let n = k.min(cands.len());
        let z: f64 = (0..n).map(|i| 0.85f64.powi(i as i32)).sum::<f64>() / 0.9;
        Ok(cands[..n]
            .iter()
            .enumerate()
            .map(|(i, w)| Prediction {
                token: w.to_string(),
                score: 0.85f64.powi(i as i32) / z,
            })
            .collect())
    }
}

impl EmbeddingService for MockLanguageModel {
    fn info(&self) -> Result<ServiceInfo> {
        Ok(MockLanguageModel::info(self))
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        let mut tokens = Vec::new();
        let mut vectors = Vec::new();
        for (i, raw) in text.split_whitespace().enumerate() {
            let tok = strip_punct(raw);
            if tok.is_empty() {
                continue;
            }
            let lower = tok.to_lowercase();
            let v = self
                .context_vector(text, i, &lower)
                .unwrap_or_else(|| gaussian_vec(hash_seed(&["oov", &lower]), self.dim, 0.3));
            tokens.push(tok.to_string());
            vectors.push(v);
        }
        if tokens.is_empty() {
            return Err(Error::validation("text has no tokens"));
        }
        Ok(Embedding { tokens, vectors })
    }

    fn token_embed(&self, word: &str) -> Result<Option<Vec<f64>>> {
        Ok(self.known.get(&word.to_lowercase()).cloned())
    }
}

impl PosTagger for MockLanguageModel {
    fn tag(&self, text: &str) -> Result<Vec<PosToken>> {
        if text.trim().is_empty() {
            return Err(Error::validation("empty text"));
        }
        let tags: HashMap<&str, &str> = FILLER_OTHER.iter().copied().collect();
        Ok(text
            .split_whitespace()
            .map(|raw| {
                let tok = strip_punct(raw);
                let pos = tags.get(tok.to_lowercase().as_str()).copied().unwrap_or("NN");
                PosToken {
                    token: tok.to_string(),
                    pos: pos.to_string(),
                }
            })
            .collect())
    }
}

/// Pipeline config for a workspace written by [`write_workspace`], paths relative to it.
pub fn workspace_config(spec: &SyntheticSpec) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(PathsConfig {
        schema: "labels.txt".into(),
        train_corpus: "train.jsonl".into(),
        test_corpus: "test.jsonl".into(),
        work_dir: "work".into(),
        mlm_cache: "cache/mlm.jsonl".into(),
        embed_cache: "cache/embed.jsonl".into(),
        pos_cache: "cache/pos.jsonl".into(),
    });
    cfg.service.model = MockLanguageModel::MODEL.into();
    cfg.service.dim = Some(spec.dim);
    cfg.service.endpoint = "http://127.0.0.1:8000".into();
    cfg
}

/// Writes corpus, schema and `config.toml` into `dir` and fills the service
/// caches from the mock, so the pipeline can then run offline.
/// Returns the config path.
pub fn write_workspace(dir: &Path, spec: &SyntheticSpec) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let corpus = generate(spec)?;
    write_label_schema(&dir.join("labels.txt"), &corpus.schema)?;
    write_corpus(&dir.join("train.jsonl"), &Corpus::new(corpus.train, corpus.schema.clone())?)?;
    write_corpus(&dir.join("test.jsonl"), &Corpus::new(corpus.test, corpus.schema)?)?;
    let cfg = workspace_config(spec);
    let config_path = dir.join("config.toml");
    jsonl::write_atomic(&config_path, cfg.to_toml()?.as_bytes())?;

    let mut resolved = cfg;
    resolved.resolve_paths(dir);
    let work = resolved.paths.work_dir.clone();
    let pipeline = Pipeline::new(resolved, Services::all(Arc::new(MockLanguageModel::new(spec.dim))))?;
    pipeline.run_stage(Stage::Signals)?;
    pipeline.run_stage(Stage::Embed)?;
    fs::remove_dir_all(&work).map_err(|e| Error::io(format!("removing {}", work.display()), e))?;
    Ok(config_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topics_are_disjoint_and_contain_label_words() {
        let mut seen = std::collections::HashSet::new();
        for (name, words) in TOPICS {
            assert!(words.contains(&name));
            for w in words {
                assert!(seen.insert(w), "{w} repeated");
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec {
            train_docs: 20,
            test_docs: 5,
            ..Default::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test.len(), 5);
    }

    #[test]
    fn topk_contract() {
        let m = MockLanguageModel::new(8);
        let p = m.top_k("tennis match at wimbledon. This article is talking about [MASK].", 10).unwrap();
        assert_eq!(p.len(), 10);
        assert!(p.windows(2).all(|w| w[0].score >= w[1].score));
        assert!(p.iter().take(2).all(|x| topic_words(0).contains(&x.token.as_str())));
        assert!(m.top_k("no mask here", 3).is_err());
        assert!(m.top_k("[MASK] and [MASK]", 3).is_err());
    }

    #[test]
    fn embed_shape() {
        let m = MockLanguageModel::new(8);
        let e = m.embed("Tennis at Wimbledon.").unwrap();
        e.check_shape(8).unwrap();
        assert_eq!(e.tokens, ["Tennis", "at", "Wimbledon"]);
        assert_eq!(e, m.embed("Tennis at Wimbledon.").unwrap());
        assert!(m.token_embed("zzzz").unwrap().is_none());
    }
}
