//! Explanation prompts and the chat-completion backend.
//!
//! The default template is the explanation-generation prompt with four
//! placeholders: `{query}`, `{token_attribution_block}`, `{url}` and
//! `{summary}`. `{k}` optionally renders the number of listed tokens. The
//! token block is one `token: value` line per attributed token, with values
//! at two decimals.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::attribution::{top_k_tokens, AttributionResult};
use crate::corpus::{Query, ResponseItem};
use crate::fsutil::{file_stem, write_atomic};
use crate::http::{build_client, post_json_with_retry, HttpError, RetryPolicy};
use crate::rerank::RerankedList;
use crate::scalar::Scalar;

pub const WITH_ATTRIBUTION_TEMPLATE: &str = "\
You are given the following information:

- A user query: {query}
- The top {k} tokens from a response, each accompanied by its attribution value indicating its importance in ranking.
{token_attribution_block}
- The response item, including its URL and full text content:
  - URL: {url}
  - Summary Text: {summary}

Using the attribution values of the top tokens, generate a concise, clear, and coherent explanation describing why this response was selected to answer the query. Focus on how the most important tokens contribute to the relevance and ranking of this response.

Your explanation should help a user understand the reasoning behind the ranking decision based on the key contributing tokens.
";

pub const WITHOUT_ATTRIBUTION_TEMPLATE: &str = "\
You are given the following information:

- A user query: {query}
- The response item, including its URL and full text content:
  - URL: {url}
  - Summary Text: {summary}

Using the response item, generate a concise, clear, and coherent explanation describing why this response was selected to answer the query.

Your explanation should help a user understand the reasoning behind the ranking decision.
";

#[derive(Debug, thiserror::Error)]
pub enum ExplainError {
    #[error("template is missing the {0} placeholder")]
    MissingPlaceholder(&'static str),
    #[error("the with_attribution variant needs at least one attributed token")]
    EmptyTopK,
    #[error("item `{0}` has an empty summary")]
    EmptySummary(String),
    #[error("no attribution for ranked item `{0}`")]
    MissingAttribution(String),
    #[error("backend: {0}")]
    Backend(#[from] HttpError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid backend config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    WithAttribution,
    WithoutAttribution,
}

impl Variant {
    pub const BOTH: [Variant; 2] = [Variant::WithAttribution, Variant::WithoutAttribution];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::WithAttribution => "with_attribution",
            Variant::WithoutAttribution => "without_attribution",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::BOTH
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub text: String,
    pub variant: Variant,
}

const PLACEHOLDERS: [&str; 5] = ["query", "token_attribution_block", "url", "summary", "k"];

impl PromptTemplate {
    pub fn new(text: impl Into<String>, variant: Variant) -> Result<Self, ExplainError> {
        let t = Self {
            text: text.into(),
            variant,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn default_for(variant: Variant) -> Self {
        let text = match variant {
            Variant::WithAttribution => WITH_ATTRIBUTION_TEMPLATE,
            Variant::WithoutAttribution => WITHOUT_ATTRIBUTION_TEMPLATE,
        };
        Self {
            text: text.to_string(),
            variant,
        }
    }

    pub fn validate(&self) -> Result<(), ExplainError> {
        let required: &[&'static str] = match self.variant {
            Variant::WithAttribution => &["{query}", "{token_attribution_block}", "{url}", "{summary}"],
            Variant::WithoutAttribution => &["{query}", "{url}", "{summary}"],
        };
        for p in required {
            if !self.text.contains(p) {
                return Err(ExplainError::MissingPlaceholder(p));
            }
        }
        Ok(())
    }
}

/// `token: 0.32` lines, one per entry.
pub fn token_block<F: Scalar>(topk: &[(String, F)]) -> String {
    topk.iter()
        .map(|(t, v)| format!("{t}: {:.2}", v.to_f64_lossy()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Single left-to-right pass; substituted text is never rescanned, and
/// unknown `{...}` sequences are copied through.
fn substitute(template: &str, lookup: impl Fn(&str) -> Option<String>) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if PLACEHOLDERS.contains(&&after[..close]) => {
                out.push_str(&lookup(&after[..close]).unwrap_or_default());
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Renders `template` for one (query, item) pair.
///
/// The without-attribution variant ignores `topk` entirely.
pub fn build_prompt<F: Scalar>(
    template: &PromptTemplate,
    query: &str,
    topk: &[(String, F)],
    url: &str,
    summary: &str,
    item_id: &str,
) -> Result<String, ExplainError> {
    template.validate()?;
    if summary.trim().is_empty() {
        return Err(ExplainError::EmptySummary(item_id.to_string()));
    }
    let with = template.variant == Variant::WithAttribution;
    if with && topk.is_empty() {
        return Err(ExplainError::EmptyTopK);
    }
    Ok(substitute(&template.text, |name| match name {
        "query" => Some(query.to_string()),
        "token_attribution_block" if with => Some(token_block(topk)),
        "k" if with => Some(topk.len().to_string()),
        "url" => Some(url.to_string()),
        "summary" => Some(summary.to_string()),
        _ => None,
    }))
}

pub fn build_item_prompt<F: Scalar>(
    template: &PromptTemplate,
    query: &Query,
    topk: &[(String, F)],
    item: &ResponseItem,
) -> Result<String, ExplainError> {
    build_prompt(template, &query.text, topk, &item.url, &item.summary, &item.id)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmBackendConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    /// Beam / candidate count. Sent only when `candidates_param` names the
    /// request field that carries it.
    pub num_candidates: u32,
    pub candidates_param: Option<String>,
    pub timeout_ms: u64,
    #[serde(flatten)]
    pub retry: RetryPolicy,
    /// Environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub max_in_flight: usize,
    /// Store per-request latency in records. Off by default so reruns are
    /// byte-identical.
    pub record_latency: bool,
}

impl Default for LlmBackendConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            temperature: 0.5,
            num_candidates: 4,
            candidates_param: None,
            timeout_ms: 60_000,
            retry: RetryPolicy::default(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            max_in_flight: 4,
            record_latency: false,
        }
    }
}

impl LlmBackendConfig {
    pub fn validate(&self) -> Result<(), ExplainError> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ExplainError::Config("temperature must be >= 0".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ExplainError::Config("max_in_flight must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    /// Offline mode: the prompt was written to disk and awaits a backend.
    Pending,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct AttributedToken<F> {
    pub token: String,
    pub value: F,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ExplanationRecord<F> {
    pub query_id: String,
    pub item_id: String,
    pub variant: Variant,
    pub status: Status,
    pub prompt: String,
    pub response: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub query_text: String,
    pub url: String,
    pub summary: String,
    /// Full-precision values behind the rendered token block.
    pub top_tokens: Vec<AttributedToken<F>>,
    pub template: String,
    /// Relative to the output directory; offline mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
}

impl<F: Scalar> ExplanationRecord<F> {
    /// Renders the prompt again from the stored inputs.
    pub fn rerender(&self) -> Result<String, ExplainError> {
        let topk: Vec<(String, F)> = self
            .top_tokens
            .iter()
            .map(|t| (t.token.clone(), t.value))
            .collect();
        let template = PromptTemplate {
            text: self.template.clone(),
            variant: self.variant,
        };
        build_prompt(&template, &self.query_text, &topk, &self.url, &self.summary, &self.item_id)
    }
}

/// One prompt to render and send.
#[derive(Clone, Debug)]
pub struct ExplainJob<'a, F> {
    pub query: &'a Query,
    pub item: &'a ResponseItem,
    pub topk: Vec<(String, F)>,
    pub template: &'a PromptTemplate,
}

enum Mode {
    Online {
        client: reqwest::blocking::Client,
        token: Option<String>,
    },
    Offline {
        out_dir: PathBuf,
    },
}

/// Sends prompts to a chat-completion endpoint, or writes them to
/// `<out_dir>/prompts/` when offline.
pub struct Explainer {
    pub cfg: LlmBackendConfig,
    mode: Mode,
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

pub const PROMPT_DIR: &str = "prompts";

fn parse_completion(body: &str) -> Result<String, String> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| format!("not JSON: {e}"))?;
    let first = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or("response has no choices[0]")?;
    let text = first
        .pointer("/message/content")
        .or_else(|| first.get("text"))
        .and_then(serde_json::Value::as_str)
        .ok_or("choices[0] has no message content")?;
    if text.trim().is_empty() {
        return Err("empty completion text".into());
    }
    Ok(text.to_string())
}

impl Explainer {
    pub fn online(cfg: LlmBackendConfig) -> Result<Self, ExplainError> {
        cfg.validate()?;
        let client = build_client(Duration::from_millis(cfg.timeout_ms))?;
        let token = cfg
            .api_key_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok());
        if cfg.candidates_param.is_none() && cfg.num_candidates > 1 {
            log::info!(
                "num_candidates={} is not sent: no candidates_param configured for this backend",
                cfg.num_candidates
            );
        }
        Ok(Self {
            cfg,
            mode: Mode::Online { client, token },
        })
    }

    pub fn offline(cfg: LlmBackendConfig, out_dir: impl Into<PathBuf>) -> Result<Self, ExplainError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            mode: Mode::Offline {
                out_dir: out_dir.into(),
            },
        })
    }

    pub fn is_offline(&self) -> bool {
        matches!(self.mode, Mode::Offline { .. })
    }

    /// Raw completion for one prompt.
    pub fn complete(&self, prompt: &str) -> Result<String, ExplainError> {
        let Mode::Online { client, token } = &self.mode else {
            return Err(ExplainError::Config("completion requested in offline mode".into()));
        };
        let mut body = serde_json::json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [Message { role: "user", content: prompt }],
        });
        if let Some(param) = &self.cfg.candidates_param {
            body[param.as_str()] = self.cfg.num_candidates.into();
        }
        Ok(post_json_with_retry(
            client,
            &self.cfg.endpoint,
            token.as_deref(),
            &[],
            &body,
            &self.cfg.retry,
            parse_completion,
        )?)
    }

    /// Renders and resolves one job.
    pub fn generate_explanation<F: Scalar>(
        &self,
        job: &ExplainJob<'_, F>,
    ) -> Result<ExplanationRecord<F>, ExplainError> {
        let prompt = build_item_prompt(job.template, job.query, &job.topk, job.item)?;
        let top_tokens = match job.template.variant {
            Variant::WithAttribution => job
                .topk
                .iter()
                .map(|(t, v)| AttributedToken {
                    token: t.clone(),
                    value: *v,
                })
                .collect(),
            Variant::WithoutAttribution => Vec::new(),
        };
        let mut rec = ExplanationRecord {
            query_id: job.query.id.clone(),
            item_id: job.item.id.clone(),
            variant: job.template.variant,
            status: Status::Pending,
            prompt,
            response: None,
            model: self.cfg.model.clone(),
            temperature: self.cfg.temperature,
            query_text: job.query.text.clone(),
            url: job.item.url.clone(),
            summary: job.item.summary.clone(),
            top_tokens,
            template: job.template.text.clone(),
            prompt_file: None,
            latency_ms: None,
        };
        match &self.mode {
            Mode::Offline { out_dir } => {
                let rel = Path::new(PROMPT_DIR).join(format!(
                    "{}__{}__{}.txt",
                    file_stem(&rec.query_id),
                    file_stem(&rec.item_id),
                    rec.variant.as_str()
                ));
                let path = out_dir.join(&rel);
                write_atomic(&path, rec.prompt.as_bytes())
                    .map_err(|source| ExplainError::Io { path, source })?;
                rec.prompt_file = Some(rel.to_string_lossy().replace('\\', "/"));
            }
            Mode::Online { .. } => {
                let start = Instant::now();
                rec.response = Some(self.complete(&rec.prompt)?);
                rec.status = Status::Completed;
                if self.cfg.record_latency {
                    rec.latency_ms = Some(start.elapsed().as_millis() as u64);
                }
            }
        }
        Ok(rec)
    }

    /// Resolves jobs with at most `max_in_flight` concurrent requests;
    /// results come back in job order. The first failure (in job order) is
    /// returned.
    pub fn run_jobs<F: Scalar>(
        &self,
        jobs: &[ExplainJob<'_, F>],
    ) -> Result<Vec<ExplanationRecord<F>>, ExplainError> {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<ExplanationRecord<F>, ExplainError>>>> =
            Mutex::new((0..jobs.len()).map(|_| None).collect());
        let workers = self.cfg.max_in_flight.min(jobs.len()).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= jobs.len() {
                        break;
                    }
                    let r = self.generate_explanation(&jobs[i]);
                    slots.lock().unwrap()[i] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|r| r.expect("every job ran"))
            .collect()
    }
}

/// One record per ranked entry and requested variant, entry-major.
pub fn explain_ranked_list<F: Scalar>(
    explainer: &Explainer,
    templates: &[PromptTemplate],
    reranked: &RerankedList<F>,
    attributions: &[AttributionResult<F>],
    k: usize,
) -> Result<Vec<ExplanationRecord<F>>, ExplainError> {
    let mut jobs = Vec::with_capacity(reranked.entries.len() * templates.len());
    for e in &reranked.entries {
        let attr = attributions
            .iter()
            .find(|a| a.item_id == e.item.id)
            .ok_or_else(|| ExplainError::MissingAttribution(e.item.id.clone()))?;
        let topk = top_k_tokens(attr, k);
        for t in templates {
            jobs.push(ExplainJob {
                query: &reranked.query,
                item: &e.item,
                topk: topk.clone(),
                template: t,
            });
        }
    }
    explainer.run_jobs(&jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table3() -> Vec<(String, f64)> {
        [
            ("carbon", 0.32),
            ("calculation", 0.28),
            ("emissions", 0.25),
            ("dataset", 0.20),
            ("measurement", 0.18),
            ("flux", 0.15),
            ("terrestrial", 0.14),
            ("carbon_cycle", 0.13),
            ("model", 0.12),
            ("greenhouse", 0.10),
        ]
        .into_iter()
        .map(|(t, v)| (t.to_string(), v))
        .collect()
    }

    #[test]
    fn with_attribution_prompt() {
        let t = PromptTemplate::default_for(Variant::WithAttribution);
        let p = build_prompt(
            &t,
            "Carbon data calculation methods",
            &table3(),
            "https://example.org/carbon",
            "Carbon flux measurements.",
            "i1",
        )
        .unwrap();
        assert!(p.lines().any(|l| l == "carbon: 0.32"));
        assert!(p.lines().any(|l| l == "greenhouse: 0.10"));
        assert!(p.contains("The top 10 tokens from a response"));
        assert!(p.contains("generate a concise, clear, and coherent explanation"));
        assert!(p.contains("- A user query: Carbon data calculation methods\n"));
    }

    #[test]
    fn without_attribution_prompt() {
        let t = PromptTemplate::default_for(Variant::WithoutAttribution);
        let p = build_prompt(&t, "q", &table3(), "u", "s", "i").unwrap();
        assert!(!p.contains("0.32"));
        assert!(!p.contains("attribution"));
        assert!(p.contains("generate a concise, clear, and coherent explanation"));
    }

    #[test]
    fn errors() {
        let t = PromptTemplate::default_for(Variant::WithAttribution);
        assert!(matches!(
            build_prompt::<f64>(&t, "q", &[], "u", "s", "i"),
            Err(ExplainError::EmptyTopK)
        ));
        assert!(matches!(
            build_prompt(&t, "q", &table3(), "u", "  ", "i"),
            Err(ExplainError::EmptySummary(_))
        ));
        assert!(matches!(
            PromptTemplate::new("{query} {url}", Variant::WithoutAttribution),
            Err(ExplainError::MissingPlaceholder("{summary}"))
        ));
    }

    #[test]
    fn substitution_is_single_pass() {
        let t = PromptTemplate::new("{query}|{url}|{summary}|{other}", Variant::WithoutAttribution)
            .unwrap();
        let p = build_prompt::<f64>(&t, "{url}", &[], "U", "S", "i").unwrap();
        assert_eq!(p, "{url}|U|S|{other}");
    }

    #[test]
    fn completion_parsing() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"Because."}}]}"#;
        assert_eq!(parse_completion(ok).unwrap(), "Because.");
        assert!(parse_completion(r#"{"choices":[]}"#).is_err());
        assert!(parse_completion("oops").is_err());
        assert!(parse_completion(r#"{"choices":[{"message":{"content":""}}]}"#).is_err());
    }
}
