use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{LogprobProvider, ScoredText};
use crate::error::ProviderError;

pub const SCORE_PATH: &str = "/v1/score_tokens";
pub const ENDPOINT_ENV: &str = "NARRAMETRIC_ENDPOINT";
pub const API_KEY_ENV: &str = "NARRAMETRIC_API_KEY";

#[derive(Debug, Serialize)]
struct ScoreRequest<'a> {
    text: &'a str,
}

#[derive(Debug, Deserialize)]
struct ScoreResponse {
    model: String,
    tokens: Vec<String>,
    logprobs: Vec<Option<f64>>,
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    error: String,
}

/// Client for the logprob sidecar (`POST /v1/score_tokens`).
#[derive(Debug, Clone)]
pub struct HttpProvider {
    url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    max_attempts: u32,
    backoff: Duration,
}

impl HttpProvider {
    /// `endpoint` is the sidecar base URL; the scoring path is appended
    /// unless it is already present.
    pub fn new(endpoint: &str) -> Result<Self, ProviderError> {
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with(SCORE_PATH) {
            base.to_string()
        } else {
            format!("{base}{SCORE_PATH}")
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| ProviderError::Transport {
                message: e.to_string(),
                attempts: 0,
            })?;
        Ok(HttpProvider {
            url,
            api_key: None,
            client,
            max_attempts: 3,
            backoff: Duration::from_millis(250),
        })
    }

    /// Endpoint and bearer token from `NARRAMETRIC_ENDPOINT` /
    /// `NARRAMETRIC_API_KEY`.
    pub fn from_env() -> Result<Self, ProviderError> {
        let endpoint = std::env::var(ENDPOINT_ENV).map_err(|_| ProviderError::Transport {
            message: format!("{ENDPOINT_ENV} is not set"),
            attempts: 0,
        })?;
        let mut p = Self::new(&endpoint)?;
        p.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Ok(p)
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key.filter(|k| !k.is_empty());
        self
    }

    pub fn with_retries(mut self, max_attempts: u32, backoff: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.backoff = backoff;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, text: &str, attempt: u32) -> Result<ScoredText, ProviderError> {
        let mut req = self.client.post(&self.url).json(&ScoreRequest { text });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ProviderError::Transport {
            message: e.to_string(),
            attempts: attempt,
        })?;
        let status = resp.status();
        let body = resp.text().map_err(|e| ProviderError::Transport {
            message: e.to_string(),
            attempts: attempt,
        })?;
        if !status.is_success() {
            let message = serde_json::from_str::<ErrorBody>(&body)
                .map(|b| b.error)
                .unwrap_or(body);
            return Err(ProviderError::Rejected {
                status: status.as_u16(),
                message,
                attempts: attempt,
            });
        }
        let parsed: ScoreResponse = serde_json::from_str(&body)
            .map_err(|e| ProviderError::Malformed(format!("{e}: {body:.200}")))?;
        debug!("scored {} tokens with {}", parsed.tokens.len(), parsed.model);
        ScoredText::new(parsed.tokens, parsed.logprobs)
    }
}

impl LogprobProvider for HttpProvider {
    fn identity(&self) -> String {
        format!("http:{}", self.url)
    }

    fn score(&self, text: &str) -> Result<ScoredText, ProviderError> {
        let mut attempt = 1;
        loop {
            match self.attempt(text, attempt) {
                Err(e) if e.retryable() && attempt < self.max_attempts => {
                    warn!("attempt {attempt} failed: {e}; retrying");
                    std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}
