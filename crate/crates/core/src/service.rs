//! Client side of the language-model sidecar.
//!
//! The sidecar speaks JSON over HTTP:
//!
//! | endpoint            | request            | response                                  |
//! |---------------------|--------------------|-------------------------------------------|
//! | `GET /v1/info`      |                    | [`ServiceInfo`]                           |
//! | `POST /v1/topk`     | `{text, k}`        | `{predictions: [{token, score}]}`         |
//! | `POST /v1/embed`    | `{text}`           | `{tokens: [..], vectors: [[..]]}`         |
//! | `POST /v1/token_embed` | `{word}`        | `{vector: [..]}` (404 if out of vocabulary) |
//! | `POST /v1/pos`      | `{text}`           | `{tokens: [{token, pos}]}`                |
//!
//! The traits below abstract over the transport so the pipeline can run
//! against mocks, cached responses or the live service.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceInfo {
    pub model: String,
    pub cased: bool,
    pub dim: usize,
    #[serde(default = "default_layer")]
    pub layer: String,
    pub max_input_tokens: usize,
    /// POS tags the service's tagger uses for nouns and proper nouns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noun_tags: Option<Vec<String>>,
}

fn default_layer() -> String {
    "last".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub token: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

impl Embedding {
    /// Checks the shape contract: one vector per token, each of length `dim`.
    pub fn check_shape(&self, dim: usize) -> Result<()> {
        if self.tokens.len() != self.vectors.len() {
            return Err(Error::validation(format!(
                "embedding response has {} tokens but {} vectors",
                self.tokens.len(),
                self.vectors.len()
            )));
        }
        if let Some(v) = self.vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::validation(format!(
                "embedding vector of length {} where {dim} was advertised",
                v.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosToken {
    pub token: String,
    pub pos: String,
}

pub trait MaskFillService: Send + Sync {
    fn info(&self) -> Result<ServiceInfo>;
    /// Top `k` predictions for the single mask in `text`, scores descending.
    fn top_k(&self, text: &str, k: usize) -> Result<Vec<Prediction>>;
}

pub trait EmbeddingService: Send + Sync {
    fn info(&self) -> Result<ServiceInfo>;
    /// One contextual vector per word of `text`.
    fn embed(&self, text: &str) -> Result<Embedding>;
    /// Context-free embedding of `word`; `None` when the model cannot represent it.
    fn token_embed(&self, word: &str) -> Result<Option<Vec<f64>>>;
}

pub trait PosTagger: Send + Sync {
    fn tag(&self, text: &str) -> Result<Vec<PosToken>>;
}

/// Blocking HTTP client for the sidecar.
pub struct HttpService {
    base: String,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct TopKResponse {
    predictions: Vec<Prediction>,
}

#[derive(Deserialize)]
struct TokenEmbedResponse {
    vector: Vec<f64>,
}

#[derive(Deserialize)]
struct PosResponse {
    tokens: Vec<PosToken>,
}

impl HttpService {
    pub fn new(endpoint: &str) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .timeout(Duration::from_secs(300))
            .build();
        HttpService {
            base: endpoint.trim_end_matches('/').to_string(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn post<T: serde::de::DeserializeOwned>(&self, path: &str, body: serde_json::Value) -> Result<T> {
        let resp = self
            .agent
            .post(&self.url(path))
            .send_json(body)
            .map_err(|e| map_ureq(path, e))?;
        resp.into_json::<T>()
            .map_err(|e| Error::Transport(format!("{path}: malformed response body: {e}")))
    }
}

fn map_ureq(path: &str, err: ureq::Error) -> Error {
    match err {
        ureq::Error::Status(code, resp) => {
            let body = resp.into_string().unwrap_or_default();
            if (400..500).contains(&code) {
                Error::validation(format!("service rejected {path} ({code}): {}", body.trim()))
            } else {
                Error::Transport(format!("{path}: HTTP {code}: {}", body.trim()))
            }
        }
        ureq::Error::Transport(t) => Error::Transport(format!("{path}: {t}")),
    }
}

impl MaskFillService for HttpService {
    fn info(&self) -> Result<ServiceInfo> {
        let resp = self
            .agent
            .get(&self.url("/v1/info"))
            .call()
            .map_err(|e| map_ureq("/v1/info", e))?;
        resp.into_json()
            .map_err(|e| Error::Transport(format!("/v1/info: malformed response body: {e}")))
    }

    fn top_k(&self, text: &str, k: usize) -> Result<Vec<Prediction>> {
        let resp: TopKResponse = self.post("/v1/topk", json!({ "text": text, "k": k }))?;
        if resp.predictions.len() > k || resp.predictions.windows(2).any(|w| w[0].score < w[1].score) {
            return Err(Error::Transport(format!(
                "/v1/topk: expected at most {k} predictions in descending score order"
            )));
        }
        Ok(resp.predictions)
    }
}

impl EmbeddingService for HttpService {
    fn info(&self) -> Result<ServiceInfo> {
        MaskFillService::info(self)
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        self.post("/v1/embed", json!({ "text": text }))
    }

    fn token_embed(&self, word: &str) -> Result<Option<Vec<f64>>> {
        let resp = self
            .agent
            .post(&self.url("/v1/token_embed"))
            .send_json(json!({ "word": word }));
        match resp {
            Ok(r) => {
                let body: TokenEmbedResponse = r.into_json().map_err(|e| {
                    Error::Transport(format!("/v1/token_embed: malformed response body: {e}"))
                })?;
                Ok(Some(body.vector))
            }
            Err(ureq::Error::Status(404, _)) => Ok(None),
            Err(e) => Err(map_ureq("/v1/token_embed", e)),
        }
    }
}

impl PosTagger for HttpService {
    fn tag(&self, text: &str) -> Result<Vec<PosToken>> {
        let resp: PosResponse = self.post("/v1/pos", json!({ "text": text }))?;
        Ok(resp.tokens)
    }
}
