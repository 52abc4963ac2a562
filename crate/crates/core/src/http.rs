//! Blocking JSON POST with exponential backoff, shared by the remote scorer
//! and the chat-completion backend.

use std::thread::sleep;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum HttpError {
    #[error("request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("HTTP {status} after {attempts} attempt(s): {body}")]
    Status {
        attempts: u32,
        status: u16,
        body: String,
    },
    #[error("unparseable response after {attempts} attempt(s): {message}")]
    Parse { attempts: u32, message: String },
    #[error("cannot build HTTP client: {0}")]
    Client(String),
}

impl HttpError {
    pub fn attempts(&self) -> u32 {
        match self {
            HttpError::Transport { attempts, .. }
            | HttpError::Status { attempts, .. }
            | HttpError::Parse { attempts, .. } => *attempts,
            HttpError::Client(_) => 0,
        }
    }
}

/// Retry schedule: `max_retries` extra attempts after the first, sleeping
/// `base_delay · 2^(attempt−1)` (capped at `max_delay`) between them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64 << attempt.saturating_sub(1).min(20);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

pub fn build_client(timeout: Duration) -> Result<Client, HttpError> {
    Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| HttpError::Client(e.to_string()))
}

fn retryable(status: StatusCode) -> bool {
    status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS
}

/// POSTs `body` and hands the response text to `parse`.
///
/// Transport errors, 5xx and 429 responses are retried; other statuses and
/// parse failures end the call immediately. Every error carries the number of
/// attempts made.
pub fn post_json_with_retry<T>(
    client: &Client,
    url: &str,
    bearer: Option<&str>,
    extra_headers: &[(&str, &str)],
    body: &serde_json::Value,
    policy: &RetryPolicy,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<T, HttpError> {
    let mut attempt = 0u32;
    loop {
        attempt += 1;
        let mut req = client.post(url).json(body);
        if let Some(token) = bearer {
            req = req.bearer_auth(token);
        }
        for (k, v) in extra_headers {
            req = req.header(*k, *v);
        }
        let failure = match req.send() {
            Ok(resp) => {
                let status = resp.status();
                let text = resp.text().unwrap_or_default();
                if status.is_success() {
                    return parse(&text).map_err(|message| HttpError::Parse {
                        attempts: attempt,
                        message,
                    });
                }
                let err = HttpError::Status {
                    attempts: attempt,
                    status: status.as_u16(),
                    body: text,
                };
                if !retryable(status) {
                    return Err(err);
                }
                err
            }
            Err(e) => HttpError::Transport {
                attempts: attempt,
                message: e.to_string(),
            },
        };
        if attempt > policy.max_retries {
            return Err(failure);
        }
        log::debug!("attempt {attempt} to {url} failed: {failure}; retrying");
        sleep(policy.delay(attempt));
    }
}
