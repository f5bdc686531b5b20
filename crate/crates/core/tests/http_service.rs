//! The HTTP client against an in-process server that speaks the sidecar protocol.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use clozeclass::service::{EmbeddingService, HttpService, MaskFillService, PosTagger};
use clozeclass::synthetic::MockLanguageModel;
use clozeclass::Error;
use serde_json::{json, Value};

type Handler = dyn Fn(&str, &str, &Value) -> (u16, Value) + Send + Sync;

/// Serves requests until the test process exits; returns the base URL.
fn serve(handler: Arc<Handler>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let h = handler.clone();
            thread::spawn(move || handle(stream, &*h));
        }
    });
    format!("http://{addr}")
}

fn handle(stream: TcpStream, handler: &Handler) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    reader.read_line(&mut request_line).unwrap();
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or("").to_string();
    let path = parts.next().unwrap_or("").to_string();
    let mut len = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).unwrap();
    let body: Value = if body.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&body).unwrap_or(Value::Null)
    };
    let (status, resp) = handler(&method, &path, &body);
    let payload = resp.to_string();
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )
    .unwrap();
}

fn sidecar(mock: MockLanguageModel) -> Arc<Handler> {
    Arc::new(move |method, path, body| {
        let text = body["text"].as_str().unwrap_or("");
        let bad = |e: Error| (400, json!({ "error": e.to_string() }));
        match (method, path) {
            ("GET", "/v1/info") => (200, serde_json::to_value(mock.info()).unwrap()),
            ("POST", "/v1/topk") => match mock.top_k(text, body["k"].as_u64().unwrap_or(0) as usize) {
                Ok(p) => (200, json!({ "predictions": p })),
                Err(e) => bad(e),
            },
            ("POST", "/v1/embed") => match mock.embed(text) {
                Ok(e) => (200, serde_json::to_value(e).unwrap()),
                Err(e) => bad(e),
            },
            ("POST", "/v1/token_embed") => match mock.token_embed(body["word"].as_str().unwrap_or("")).unwrap() {
                Some(v) => (200, json!({ "vector": v })),
                None => (404, json!({ "error": "unknown word" })),
            },
            ("POST", "/v1/pos") => match mock.tag(text) {
                Ok(t) => (200, json!({ "tokens": t })),
                Err(e) => bad(e),
            },
            _ => (404, json!({ "error": "no route" })),
        }
    })
}

fn client() -> HttpService {
    HttpService::new(&serve(sidecar(MockLanguageModel::new(12))))
}

#[test]
fn info_round_trips() {
    let info = MaskFillService::info(&client()).unwrap();
    assert_eq!(info.dim, 12);
    assert_eq!(info.model, MockLanguageModel::MODEL);
    assert!(!info.cased);
}

#[test]
fn topk_returns_k_descending_predictions() {
    let svc = client();
    let p = svc
        .top_k("The senate passed the treaty. This article is talking about [MASK].", 9)
        .unwrap();
    assert_eq!(p.len(), 9);
    assert!(p.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn maskless_text_is_rejected_as_validation() {
    let err = client().top_k("no placeholder here", 3).unwrap_err();
    assert!(matches!(err, Error::Validation(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn embed_shape_contract() {
    let svc = client();
    let e = svc.embed("Physics and chemistry meet in the laboratory").unwrap();
    e.check_shape(12).unwrap();
    assert_eq!(e.tokens.len(), 7);
    assert_eq!(e, svc.embed("Physics and chemistry meet in the laboratory").unwrap());
}

#[test]
fn token_embed_404_means_unrepresentable() {
    let svc = client();
    assert_eq!(svc.token_embed("galaxy").unwrap().unwrap().len(), 12);
    assert_eq!(svc.token_embed("qwzx").unwrap(), None);
}

#[test]
fn pos_tags() {
    let tags = client().tag("the referee said").unwrap();
    let pos: Vec<&str> = tags.iter().map(|t| t.pos.as_str()).collect();
    assert_eq!(pos, ["DT", "NN", "VBD"]);
    assert!(client().tag("  ").is_err());
}

#[test]
fn server_errors_and_refused_connections_are_transport_errors() {
    let url = serve(Arc::new(|_: &str, _: &str, _: &Value| (503, json!({ "error": "loading" }))));
    let err = HttpService::new(&url).embed("x").unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
    assert_eq!(err.exit_code(), 3);

    let closed = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    let err = HttpService::new(&format!("http://{closed}")).embed("x").unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
}

#[test]
fn unsorted_topk_response_is_rejected() {
    let url = serve(Arc::new(|_: &str, _: &str, _: &Value| {
        (
            200,
            json!({ "predictions": [{"token": "a", "score": 0.1}, {"token": "b", "score": 0.5}] }),
        )
    }));
    assert!(matches!(
        HttpService::new(&url).top_k("[MASK]", 2),
        Err(Error::Transport(_))
    ));
}
