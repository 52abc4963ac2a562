mod common;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use rerank_core::stub::{StubResponse, StubServer};
use rerank_explain::pipeline::{self, Context, Partition, ScorerName};
use rerank_explain::server::{spawn, AppState, ExplainResponse};

fn start(out: &Path, endpoint: Option<String>, scorer: ScorerName) -> (Context, String) {
    let mut cfg = common::config(out);
    if let Some(e) = &endpoint {
        cfg.backend.endpoint = e.clone();
        cfg.backend.retry.max_retries = 0;
    }
    let state = AppState::new(Context::load(cfg.clone()).unwrap(), scorer, endpoint.is_none()).unwrap();
    let addr = spawn(Arc::new(state), "127.0.0.1:0".parse::<SocketAddr>().unwrap()).unwrap();
    (Context::load(cfg).unwrap(), format!("http://{addr}"))
}

fn post(url: &str, body: &str) -> (u16, String) {
    let resp = reqwest::blocking::Client::new()
        .post(url)
        .header("content-type", "application/json")
        .body(body.to_string())
        .send()
        .unwrap();
    (resp.status().as_u16(), resp.text().unwrap())
}

#[test]
fn health() {
    let dir = tempfile::tempdir().unwrap();
    let (_, base) = start(dir.path(), None, ScorerName::Bm25);
    let resp = reqwest::blocking::get(format!("{base}/health")).unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let v: serde_json::Value = resp.json().unwrap();
    assert_eq!(v["status"], "ok");
}

#[test]
fn rerank_matches_cli_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (ctx, base) = start(dir.path(), None, ScorerName::Bm25);
    pipeline::cmd_rerank(&ctx, ScorerName::Bm25, Partition::All, None).unwrap();
    let file = std::fs::read_to_string(dir.path().join("reranked_bm25.jsonl")).unwrap();
    for (i, line) in file.lines().enumerate() {
        let qid = format!("q{:03}", i + 1);
        let (status, body) = post(&format!("{base}/rerank"), &format!("{{\"query_id\":\"{qid}\"}}"));
        assert_eq!(status, 200);
        assert_eq!(body, line);
    }
}

#[test]
fn rerank_free_text_and_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let (_, base) = start(dir.path(), None, ScorerName::Bm25);
    let (status, body) = post(&format!("{base}/rerank"), r#"{"query":"aerosol concentration"}"#);
    assert_eq!(status, 200, "{body}");
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert!(!v["entries"].as_array().unwrap().is_empty());

    let (status, body) = post(
        &format!("{base}/rerank"),
        r#"{"query":"aerosol","candidate_ids":["q001-d01","q002-d01"],"m_r":1}"#,
    );
    assert_eq!(status, 200, "{body}");
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["entries"].as_array().unwrap().len(), 1);
}

#[test]
fn request_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (_, base) = start(dir.path(), None, ScorerName::Bm25);
    assert_eq!(post(&format!("{base}/rerank"), "{not json").0, 400);
    assert_eq!(post(&format!("{base}/rerank"), r#"{"bogus":1}"#).0, 400);
    assert_eq!(post(&format!("{base}/rerank"), r#"{"query_id":"nope"}"#).0, 404);
    assert_eq!(
        post(&format!("{base}/rerank"), r#"{"query":"x","candidate_ids":["missing"]}"#).0,
        404
    );
    assert_eq!(
        post(&format!("{base}/explain"), r#"{"query_id":"q001","item_id":"missing"}"#).0,
        404
    );
    assert_eq!(post(&format!("{base}/explain"), r#"{"query_id":"q001"}"#).0, 400);
}

#[test]
fn explain_echoes_variant() {
    let stub = StubServer::start(vec![StubResponse::ok(common::chat_reply("because"))]);
    let dir = tempfile::tempdir().unwrap();
    let (_, base) = start(dir.path(), Some(stub.url()), ScorerName::Bm25);
    for variant in ["with_attribution", "without_attribution"] {
        let (status, body) = post(
            &format!("{base}/explain"),
            &format!(r#"{{"query_id":"q001","item_id":"q001-d03","variant":"{variant}"}}"#),
        );
        assert_eq!(status, 200, "{body}");
        let r: ExplainResponse = serde_json::from_str(&body).unwrap();
        assert_eq!(r.explanation.variant.as_str(), variant);
        assert_eq!(r.explanation.response.as_deref(), Some("because"));
        assert_eq!(r.attribution.result.item_id, "q001-d03");
    }
}

#[test]
fn backend_failure_is_502() {
    let stub = StubServer::start(vec![StubResponse::status(500, "down")]);
    let dir = tempfile::tempdir().unwrap();
    let (_, base) = start(dir.path(), Some(stub.url()), ScorerName::Bm25);
    let (status, _) = post(
        &format!("{base}/explain"),
        r#"{"query":"aerosol","item_id":"q001-d03"}"#,
    );
    assert_eq!(status, 502);
}

#[test]
fn concurrent_requests() {
    let dir = tempfile::tempdir().unwrap();
    let (ctx, base) = start(dir.path(), None, ScorerName::Bm25);
    pipeline::cmd_rerank(&ctx, ScorerName::Bm25, Partition::All, None).unwrap();
    let file = std::fs::read_to_string(dir.path().join("reranked_bm25.jsonl")).unwrap();
    let lines: Vec<String> = file.lines().map(String::from).collect();
    std::thread::scope(|s| {
        for t in 0..8 {
            let (base, lines) = (&base, &lines);
            s.spawn(move || {
                let i = t % lines.len();
                let (status, body) = post(
                    &format!("{base}/rerank"),
                    &format!("{{\"query_id\":\"q{:03}\"}}", i + 1),
                );
                assert_eq!(status, 200);
                assert_eq!(body, lines[i]);
            });
        }
    });
}
