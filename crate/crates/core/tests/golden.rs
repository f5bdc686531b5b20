//! Replays a pinned mask-fill response for a tennis news snippet.

use std::fs;
use std::path::PathBuf;

use clozeclass::signals::{acquire_mlm_signals, MlmCache, MlmClient, PromptTemplate};
use clozeclass::{load_corpus, load_label_schema};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn pinned_response_yields_expected_signal_words() {
    let schema = load_label_schema(&fixture("labels.txt")).unwrap();
    let corpus = load_corpus(&fixture("docs.jsonl"), &schema).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache_path = dir.path().join("mlm.jsonl");
    fs::copy(fixture("mlm_cache.jsonl"), &cache_path).unwrap();

    let client = MlmClient::new(
        None,
        "bert-base-uncased",
        512,
        PromptTemplate::default(),
        MlmCache::open(&cache_path).unwrap(),
    );
    let set = acquire_mlm_signals(&corpus.documents[0], &client, 5).unwrap();
    let words: Vec<&str> = set.word_list().collect();
    assert_eq!(words, ["tennis", "thailand", "federer", "seeds", "wimbledon"]);
    assert!(set.words.windows(2).all(|w| w[0].1 >= w[1].1));

    // replay does not touch the cache file
    assert_eq!(
        fs::read(&cache_path).unwrap(),
        fs::read(fixture("mlm_cache.jsonl")).unwrap()
    );
}

#[test]
fn other_model_or_k_misses_the_pinned_entry() {
    let schema = load_label_schema(&fixture("labels.txt")).unwrap();
    let corpus = load_corpus(&fixture("docs.jsonl"), &schema).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache_path = dir.path().join("mlm.jsonl");
    fs::copy(fixture("mlm_cache.jsonl"), &cache_path).unwrap();
    let cased = MlmClient::new(
        None,
        "bert-base-cased",
        512,
        PromptTemplate::default(),
        MlmCache::open(&cache_path).unwrap(),
    );
    assert_eq!(
        acquire_mlm_signals(&corpus.documents[0], &cased, 5).unwrap_err().exit_code(),
        3
    );
    let uncased = MlmClient::new(
        None,
        "bert-base-uncased",
        512,
        PromptTemplate::default(),
        MlmCache::open(&cache_path).unwrap(),
    );
    assert!(acquire_mlm_signals(&corpus.documents[0], &uncased, 6).is_err());
}
