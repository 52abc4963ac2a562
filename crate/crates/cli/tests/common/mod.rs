#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rerank_explain::config::PipelineConfig;
use rerank_explain::pipeline::Context;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Config over the 10-ranking fixture writing into `out`, with a fast
/// retry policy and no API key lookup.
pub fn config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        dataset: fixture("dataset_10.jsonl"),
        out_dir: out.to_path_buf(),
        ..PipelineConfig::default()
    };
    cfg.backend.api_key_env = None;
    cfg.backend.retry.base_delay_ms = 1;
    cfg.backend.retry.max_delay_ms = 2;
    cfg.attribution.permutations = 200;
    cfg
}

pub fn context(out: &Path) -> Context {
    Context::load(config(out)).unwrap()
}

pub fn chat_reply(text: &str) -> String {
    serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": text } }] })
        .to_string()
}
