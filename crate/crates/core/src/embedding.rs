//! Static word representations: the mean contextual embedding of a word over
//! all of its corpus occurrences, with a context-free fallback for words the
//! corpus never contains.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::jsonl::{self, Appender};
use crate::parallel::map_ordered;
use crate::service::{Embedding, EmbeddingService};
use crate::signals::truncate_words;

const STORE_MAGIC: &[u8; 8] = b"SRSTORE1";

#[derive(Debug, Clone, PartialEq)]
pub struct StoreEntry {
    pub vector: Vec<f64>,
    /// Corpus occurrences; 0 for fallback entries.
    pub count: u32,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    model: String,
    layer: String,
    entries: BTreeMap<String, StoreEntry>,
}

impl EmbeddingStore {
    pub fn new(
        dim: usize,
        model: impl Into<String>,
        layer: impl Into<String>,
        entries: BTreeMap<String, StoreEntry>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("embedding dimension must be positive"));
        }
        for (w, e) in &entries {
            if e.vector.len() != dim {
                return Err(Error::validation(format!(
                    "vector for {w:?} has length {}, expected {dim}",
                    e.vector.len()
                )));
            }
            if !e.fallback && e.count == 0 {
                return Err(Error::validation(format!("{w:?} has zero occurrences but is not a fallback")));
            }
        }
        Ok(EmbeddingStore {
            dim,
            model: model.into(),
            layer: layer.into(),
            entries,
        })
    }

    /// Store built directly from word vectors, each counted as one occurrence.
    pub fn from_vectors<I, S>(dim: usize, vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let entries = vectors
            .into_iter()
            .map(|(w, v)| {
                (
                    w.into(),
                    StoreEntry {
                        vector: v,
                        count: 1,
                        fallback: false,
                    },
                )
            })
            .collect();
        EmbeddingStore::new(dim, "unspecified", "unspecified", entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn layer(&self) -> &str {
        &self.layer
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&StoreEntry> {
        self.entries.get(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(|e| e.vector.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &StoreEntry)> {
        self.entries.iter().map(|(w, e)| (w.as_str(), e))
    }

    /// Same store with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for e in out.entries.values_mut() {
            e.vector.iter_mut().for_each(|x| *x *= factor);
        }
        out
    }

    /// Writes the binary store to `path` and a plain-text index next to it (`.idx`).
    ///
    /// Layout: magic, dim (u32), entry count (u32), then per entry a
    /// length-prefixed UTF-8 word, the occurrence count (u32, 0 marks a
    /// fallback) and `dim` little-endian f32 values.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + self.entries.len() * (self.dim * 4 + 16));
        buf.extend_from_slice(STORE_MAGIC);
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (w, e) in &self.entries {
            buf.extend_from_slice(&(w.len() as u32).to_le_bytes());
            buf.extend_from_slice(w.as_bytes());
            let count = if e.fallback { 0 } else { e.count };
            buf.extend_from_slice(&count.to_le_bytes());
            for &x in &e.vector {
                buf.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        jsonl::write_atomic(path, &buf)?;

        let mut idx = format!(
            "# model={} layer={} dim={} entries={}\n",
            self.model,
            self.layer,
            self.dim,
            self.entries.len()
        );
        for (w, e) in &self.entries {
            idx.push_str(&format!("{w}\t{}\t{}\n", e.count, e.fallback));
        }
        jsonl::write_atomic(&index_path(path), idx.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let corrupt = |what: &str| Error::validation(format!("{}: corrupt store ({what})", path.display()));
        let mut r = ByteReader::new(&bytes);
        if r.take(8).ok_or_else(|| corrupt("header"))? != STORE_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let dim = r.u32().ok_or_else(|| corrupt("dim"))? as usize;
        let n = r.u32().ok_or_else(|| corrupt("count"))? as usize;
        let mut entries = BTreeMap::new();
        for _ in 0..n {
            let len = r.u32().ok_or_else(|| corrupt("word length"))? as usize;
            let word = std::str::from_utf8(r.take(len).ok_or_else(|| corrupt("word"))?)
                .map_err(|_| corrupt("word is not UTF-8"))?
                .to_string();
            let count = r.u32().ok_or_else(|| corrupt("occurrence count"))?;
            let vector = (0..dim)
                .map(|_| r.f32().map(f64::from))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| corrupt("vector"))?;
            entries.insert(
                word,
                StoreEntry {
                    vector,
                    count,
                    fallback: count == 0,
                },
            );
        }
        let (model, layer) = read_index_meta(&index_path(path));
        EmbeddingStore::new(dim, model, layer, entries)
    }
}

pub fn index_path(store_path: &Path) -> PathBuf {
    store_path.with_extension("idx")
}

fn read_index_meta(path: &Path) -> (String, String) {
    let mut model = "unspecified".to_string();
    let mut layer = "unspecified".to_string();
    if let Ok(text) = fs::read_to_string(path) {
        if let Some(header) = text.lines().next().and_then(|l| l.strip_prefix("# ")) {
            for kv in header.split_whitespace() {
                match kv.split_once('=') {
                    Some(("model", v)) => model = v.to_string(),
                    Some(("layer", v)) => layer = v.to_string(),
                    _ => {}
                }
            }
        }
    }
    (model, layer)
}

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    pub(crate) fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub(crate) fn f32(&mut self) -> Option<f32> {
        self.take(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }

    pub(crate) fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbedCacheRecord {
    Doc {
        doc_id: String,
        model: String,
        tokens: Vec<String>,
        vectors: Vec<Vec<f64>>,
    },
    Token {
        word: String,
        model: String,
        vector: Option<Vec<f64>>,
    },
}

/// Append-only cache of embedding responses; every response is written as it
/// arrives so an interrupted build resumes where it stopped.
pub struct EmbedCache {
    docs: HashMap<(String, String), Embedding>,
    tokens: HashMap<(String, String), Option<Vec<f64>>>,
    appender: Option<Appender>,
}

impl EmbedCache {
    pub fn in_memory() -> Self {
        EmbedCache {
            docs: HashMap::new(),
            tokens: HashMap::new(),
            appender: None,
        }
    }

    pub fn open(path: &Path) -> Result<Self> {
        let mut cache = EmbedCache::in_memory();
        for rec in jsonl::read_records_if_exists::<EmbedCacheRecord>(path)? {
            match rec {
                EmbedCacheRecord::Doc {
                    doc_id,
                    model,
                    tokens,
                    vectors,
                } => {
                    cache.docs.insert((doc_id, model), Embedding { tokens, vectors });
                }
                EmbedCacheRecord::Token { word, model, vector } => {
                    cache.tokens.insert((word, model), vector);
                }
            }
        }
        cache.appender = Some(Appender::open(path)?);
        Ok(cache)
    }

    /// Raw per-document responses currently held, keyed by doc id.
    pub fn doc_entries(&self, model: &str) -> HashMap<&str, &Embedding> {
        self.docs
            .iter()
            .filter(|((_, m), _)| m == model)
            .map(|((d, _), e)| (d.as_str(), e))
            .collect()
    }
}

/// Embedding-service client with caching, truncation and offline mode.
pub struct EmbedClient<'a> {
    service: Option<&'a dyn EmbeddingService>,
    model: String,
    dim: usize,
    max_input_tokens: usize,
    cache: Mutex<EmbedCache>,
}

impl<'a> EmbedClient<'a> {
    pub fn new(
        service: Option<&'a dyn EmbeddingService>,
        model: impl Into<String>,
        dim: usize,
        max_input_tokens: usize,
        cache: EmbedCache,
    ) -> Self {
        EmbedClient {
            service,
            model: model.into(),
            dim,
            max_input_tokens,
            cache: Mutex::new(cache),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn embed_document(&self, doc: &Document) -> Result<Embedding> {
        let key = (doc.id.clone(), self.model.clone());
        if let Some(hit) = self.cache.lock().unwrap().docs.get(&key) {
            return Ok(hit.clone());
        }
        let service = self.service.ok_or_else(|| {
            Error::Transport(format!("offline and no cached embedding for document {:?}", doc.id))
        })?;
        let text = truncate_words(&doc.text, self.max_input_tokens.saturating_sub(2).max(1));
        let emb = service.embed(text)?;
        emb.check_shape(self.dim)?;
        let mut cache = self.cache.lock().unwrap();
        if let Some(app) = &mut cache.appender {
            app.append(&EmbedCacheRecord::Doc {
                doc_id: doc.id.clone(),
                model: self.model.clone(),
                tokens: emb.tokens.clone(),
                vectors: emb.vectors.clone(),
            })?;
        }
        cache.docs.insert(key, emb.clone());
        Ok(emb)
    }

    pub fn token_embedding(&self, word: &str) -> Result<Option<Vec<f64>>> {
        let key = (word.to_string(), self.model.clone());
        if let Some(hit) = self.cache.lock().unwrap().tokens.get(&key) {
            return Ok(hit.clone());
        }
        let service = self.service.ok_or_else(|| {
            Error::Transport(format!("offline and no cached token embedding for {word:?}"))
        })?;
        let vector = service.token_embed(word)?;
        if let Some(v) = &vector {
            if v.len() != self.dim {
                return Err(Error::validation(format!(
                    "token embedding for {word:?} has length {}, expected {}",
                    v.len(),
                    self.dim
                )));
            }
        }
        let mut cache = self.cache.lock().unwrap();
        if let Some(app) = &mut cache.appender {
            app.append(&EmbedCacheRecord::Token {
                word: word.to_string(),
                model: self.model.clone(),
                vector: vector.clone(),
            })?;
        }
        cache.tokens.insert(key, vector.clone());
        Ok(vector)
    }

    /// Embeds all documents with bounded concurrency, keeping document order.
    pub fn embed_all(&self, docs: &[Document], parallelism: usize) -> Result<Vec<Embedding>> {
        map_ordered(docs, parallelism, |d| self.embed_document(d))
            .into_iter()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedWord {
    pub word: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    pub excluded: Vec<ExcludedWord>,
    pub fallbacks: usize,
}

/// Per-word running sums in double precision.
#[derive(Default)]
struct Accumulator {
    sums: BTreeMap<String, (Vec<f64>, u32)>,
}

impl Accumulator {
    fn add(&mut self, word: &str, v: &[f64]) {
        let (sum, n) = self
            .sums
            .entry(word.to_string())
            .or_insert_with(|| (vec![0.0; v.len()], 0));
        sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        *n += 1;
    }
}

/// Folds contextual embeddings of `words` into static representations.
/// Occurrences are matched case-insensitively against whole service tokens.
pub fn accumulate_occurrences<'e>(
    embeddings: impl IntoIterator<Item = &'e Embedding>,
    words: &BTreeSet<String>,
) -> BTreeMap<String, StoreEntry> {
    let mut acc = Accumulator::default();
    for emb in embeddings {
        for (tok, v) in emb.tokens.iter().zip(&emb.vectors) {
            let t = tok.to_lowercase();
            if words.contains(&t) {
                acc.add(&t, v);
            }
        }
    }
    acc.sums
        .into_iter()
        .map(|(w, (sum, n))| {
            let vector = sum.into_iter().map(|s| s / f64::from(n)).collect();
            (
                w,
                StoreEntry {
                    vector,
                    count: n,
                    fallback: false,
                },
            )
        })
        .collect()
}

/// Builds the store for `words_of_interest` from pre-fetched document embeddings.
pub fn build_from_embeddings(
    embeddings: &[Embedding],
    words_of_interest: &BTreeSet<String>,
    client: &EmbedClient<'_>,
    layer: &str,
) -> Result<(EmbeddingStore, BuildReport)> {
    if words_of_interest.is_empty() {
        return Err(Error::Precondition("no words of interest to embed".into()));
    }
    let mut entries = accumulate_occurrences(embeddings, words_of_interest);
    let mut report = BuildReport::default();
    for w in words_of_interest {
        if entries.contains_key(w) {
            continue;
        }
        match client.token_embedding(w)? {
            Some(vector) => {
                report.fallbacks += 1;
                entries.insert(
                    w.clone(),
                    StoreEntry {
                        vector,
                        count: 0,
                        fallback: true,
                    },
                );
            }
            None => report.excluded.push(ExcludedWord {
                word: w.clone(),
                reason: "absent from corpus and service vocabulary".into(),
            }),
        }
    }
    let store = EmbeddingStore::new(client.dim(), client.model(), layer, entries)?;
    Ok((store, report))
}

pub fn build_static_representations(
    docs: &[Document],
    words_of_interest: &BTreeSet<String>,
    client: &EmbedClient<'_>,
    layer: &str,
    parallelism: usize,
) -> Result<(EmbeddingStore, BuildReport)> {
    let embeddings = client.embed_all(docs, parallelism)?;
    build_from_embeddings(&embeddings, words_of_interest, client, layer)
}

/// Mean representation of the resolvable words of a phrase.
pub fn phrase_sr<S: AsRef<str>>(words: &[S], store: &EmbeddingStore) -> Result<Vec<f64>> {
    // running mean, exact when every word has the same vector
    let mut mean = vec![0.0; store.dim()];
    let mut n = 0usize;
    for w in words {
        match store.vector(w.as_ref()) {
            Some(v) => {
                n += 1;
                mean.iter_mut().zip(v).for_each(|(m, x)| *m += (x - *m) / n as f64);
            }
            None => log::debug!("skipping unresolvable word {:?}", w.as_ref()),
        }
    }
    if n == 0 {
        return Err(Error::UnresolvablePhrase(
            words.iter().map(|w| w.as_ref().to_string()).collect(),
        ));
    }
    Ok(mean)
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DegenerateVector(format!(
            "length mismatch {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::DegenerateVector("zero-norm input to cosine".into()));
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

pub fn write_build_report(path: &Path, report: &BuildReport) -> Result<()> {
    jsonl::write_records(path, &report.excluded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn emb(tokens: &[&str], vectors: Vec<Vec<f64>>) -> Embedding {
        Embedding {
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            vectors,
        }
    }

    struct NoService;
    impl EmbeddingService for NoService {
        fn info(&self) -> Result<crate::service::ServiceInfo> {
            unimplemented!()
        }
        fn embed(&self, _: &str) -> Result<Embedding> {
            Err(Error::Transport("down".into()))
        }
        fn token_embed(&self, w: &str) -> Result<Option<Vec<f64>>> {
            Ok(if w == "zzzz" { None } else { Some(vec![9.0, 8.0]) })
        }
    }

    fn words(ws: &[&str]) -> BTreeSet<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_occurrence_is_unchanged() {
        let e = emb(&["Galaxy", "x"], vec![vec![1.5, -2.0], vec![0.0, 0.0]]);
        let got = accumulate_occurrences([&e], &words(&["galaxy"]));
        assert_eq!(got["galaxy"].vector, vec![1.5, -2.0]);
        assert_eq!(got["galaxy"].count, 1);
    }

    #[test]
    fn two_occurrences_average_across_documents() {
        let a = emb(&["star"], vec![vec![1.0, 3.0]]);
        let b = emb(&["big", "star"], vec![vec![7.0, 7.0], vec![3.0, -1.0]]);
        let got = accumulate_occurrences([&a, &b], &words(&["star"]));
        // per-occurrence oracle
        let oracle: Vec<f64> = (0..2).map(|i| (a.vectors[0][i] + b.vectors[1][i]) / 2.0).collect();
        assert_eq!(got["star"].vector, oracle);
        assert_eq!(got["star"].count, 2);
    }

    #[test]
    fn absent_word_falls_back_or_is_excluded() {
        let svc = NoService;
        let client = EmbedClient::new(Some(&svc), "m", 2, 512, EmbedCache::in_memory());
        let e = emb(&["star"], vec![vec![1.0, 3.0]]);
        let (store, report) =
            build_from_embeddings(&[e], &words(&["star", "astronomy", "zzzz"]), &client, "last").unwrap();
        let fb = store.get("astronomy").unwrap();
        assert!(fb.fallback);
        assert_eq!(fb.vector, vec![9.0, 8.0]);
        assert!(store.get("zzzz").is_none());
        assert_eq!(report.excluded.len(), 1);
        assert_eq!(report.fallbacks, 1);
    }

    #[test]
    fn transport_failure_surfaces() {
        let svc = NoService;
        let client = EmbedClient::new(Some(&svc), "m", 2, 512, EmbedCache::in_memory());
        let docs = [Document::new("a", "star")];
        assert!(matches!(
            build_static_representations(&docs, &words(&["star"]), &client, "last", 1),
            Err(Error::Transport(_))
        ));
    }

    #[test]
    fn phrase_cases() {
        let store = EmbeddingStore::from_vectors(2, [("a", vec![1.0, 0.0]), ("b", vec![0.0, 3.0])]).unwrap();
        assert_eq!(phrase_sr(&["a"], &store).unwrap(), vec![1.0, 0.0]);
        assert_eq!(phrase_sr(&["a", "b"], &store).unwrap(), vec![0.5, 1.5]);
        assert_eq!(phrase_sr(&["a", "nope"], &store).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(phrase_sr(&["nope"], &store), Err(Error::UnresolvablePhrase(_))));
        assert_eq!(phrase_sr(&["b", "b", "b"], &store).unwrap(), vec![0.0, 3.0]);
    }

    #[test]
    fn cosine_cases() {
        let u = [0.3, -1.2, 4.0];
        assert_abs_diff_eq!(cosine(&u, &u).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        assert_abs_diff_eq!(cosine(&u, &neg).unwrap(), -1.0, epsilon = 1e-15);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::DegenerateVector(_))));
    }

    #[test]
    fn store_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut entries = BTreeMap::new();
        entries.insert(
            "galaxy".to_string(),
            StoreEntry {
                vector: vec![0.5, -0.25],
                count: 3,
                fallback: false,
            },
        );
        entries.insert(
            "astronomy".to_string(),
            StoreEntry {
                vector: vec![1.0, 2.0],
                count: 0,
                fallback: true,
            },
        );
        let store = EmbeddingStore::new(2, "bert-base-uncased", "last", entries).unwrap();
        let p = dir.path().join("sr.bin");
        store.save(&p).unwrap();
        assert_eq!(EmbeddingStore::load(&p).unwrap(), store);
        let idx = fs::read_to_string(index_path(&p)).unwrap();
        assert!(idx.starts_with("# model=bert-base-uncased layer=last dim=2 entries=2"));
    }

    #[test]
    fn load_rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.bin");
        fs::write(&p, b"SRSTORE1\x02\x00\x00\x00\x05\x00").unwrap();
        assert!(EmbeddingStore::load(&p).is_err());
    }

    proptest! {
        #[test]
        fn cosine_scale_invariant(
            u in prop::collection::vec(-10.0f64..10.0, 4),
            v in prop::collection::vec(-10.0f64..10.0, 4),
            a in 0.01f64..100.0,
            b in 0.01f64..100.0,
        ) {
            prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
            let su: Vec<f64> = u.iter().map(|x| x * a).collect();
            let sv: Vec<f64> = v.iter().map(|x| x * b).collect();
            let c0 = cosine(&u, &v).unwrap();
            prop_assert!((cosine(&su, &sv).unwrap() - c0).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&c0));
        }

        #[test]
        fn sr_is_order_invariant(
            vals in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..12),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let docs: Vec<Embedding> = vals.iter().map(|v| emb(&["w"], vec![v.clone()])).collect();
            let mut shuffled = docs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let ws = words(&["w"]);
            let a = accumulate_occurrences(&docs, &ws);
            let b = accumulate_occurrences(&shuffled, &ws);
            for (x, y) in a["w"].vector.iter().zip(&b["w"].vector) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }
}
