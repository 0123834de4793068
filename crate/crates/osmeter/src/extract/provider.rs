//! Pluggable language-model providers: the deterministic stub used by every
//! test, and a thin JSON-over-HTTPS client for live runs.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Routing metadata for one provider call: which paper and which prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallKey {
    pub doi: String,
    pub template: String,
}

impl CallKey {
    pub fn fixture_key(&self) -> String {
        format!("{}|{}", self.doi, self.template)
    }
}

#[derive(Debug, Clone)]
pub struct ProviderRequest {
    pub prompt: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone)]
pub struct ProviderResponse {
    pub text: String,
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
    pub latency_ms: u64,
    pub provider_id: String,
}

pub trait Provider: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, key: &CallKey, request: &ProviderRequest) -> Result<ProviderResponse>;
}

/// Fixture entry marker that simulates a transport failure.
pub const FAIL_MARKER: &str = "__FAIL__";
/// Fixture entry marker that simulates a rate-limit signal.
pub const RATE_LIMIT_MARKER: &str = "__RATE_LIMIT__";

/// Deterministic canned-response provider driven by a fixtures file mapping
/// `"<doi>|<template-id>"` to a response or a list of responses consumed in
/// order (the last one repeats). `__FAIL__` entries raise transport
/// failures, `__RATE_LIMIT__` raises a rate-limit signal.
pub struct StubProvider {
    fixtures: HashMap<String, Vec<String>>,
    cursor: Mutex<HashMap<String, usize>>,
}

impl StubProvider {
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&raw)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(raw)
            .map_err(|e| Error::Config(format!("stub fixtures parse: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("stub fixtures must be a JSON object".into()))?;
        let mut fixtures = HashMap::new();
        for (key, v) in obj {
            let responses: Vec<String> = match v {
                Value::String(s) => vec![s.clone()],
                Value::Array(items) => items
                    .iter()
                    .map(|i| {
                        i.as_str().map(str::to_string).ok_or_else(|| {
                            Error::Config(format!("stub fixture {key}: non-string entry"))
                        })
                    })
                    .collect::<Result<_>>()?,
                other => {
                    return Err(Error::Config(format!(
                        "stub fixture {key}: expected string or array, got {other}"
                    )))
                }
            };
            if responses.is_empty() {
                return Err(Error::Config(format!("stub fixture {key} is empty")));
            }
            fixtures.insert(key.clone(), responses);
        }
        Ok(Self {
            fixtures,
            cursor: Mutex::new(HashMap::new()),
        })
    }

    fn next_response(&self, key: &str) -> Result<String> {
        let responses = self
            .fixtures
            .get(key)
            .ok_or_else(|| Error::Provider(format!("no stub fixture for {key}")))?;
        let mut cursor = self.cursor.lock().unwrap();
        let idx = cursor.entry(key.to_string()).or_insert(0);
        let response = responses[(*idx).min(responses.len() - 1)].clone();
        *idx += 1;
        Ok(response)
    }
}

impl Provider for StubProvider {
    fn id(&self) -> &str {
        "stub"
    }

    fn complete(&self, key: &CallKey, _request: &ProviderRequest) -> Result<ProviderResponse> {
        let fixture_key = key.fixture_key();
        let text = self.next_response(&fixture_key)?;
        match text.as_str() {
            FAIL_MARKER => Err(Error::Provider(format!(
                "stub transport failure for {fixture_key}"
            ))),
            RATE_LIMIT_MARKER => Err(Error::Provider(format!(
                "rate limit (stub) for {fixture_key}"
            ))),
            _ => Ok(ProviderResponse {
                text,
                prompt_tokens: 0,
                completion_tokens: 0,
                latency_ms: 0,
                provider_id: "stub".into(),
            }),
        }
    }
}

/// Minimal JSON-over-HTTPS provider: POSTs `{model, temperature, max_tokens,
/// prompt}` and expects `{"text": "..."}` back. The API key is read from an
/// environment variable and sent as a bearer token.
pub struct HttpProvider {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(endpoint: &str, api_key_env: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            endpoint: endpoint.to_string(),
            api_key: std::env::var(api_key_env).ok(),
            agent,
        }
    }
}

impl Provider for HttpProvider {
    fn id(&self) -> &str {
        "live"
    }

    fn complete(&self, _key: &CallKey, request: &ProviderRequest) -> Result<ProviderResponse> {
        let started = Instant::now();
        let body = json!({
            "model": request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "prompt": request.prompt,
        });
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| Error::Provider(format!("transport: {e}")))?;
        let status = resp.status().as_u16();
        if status == 429 {
            return Err(Error::Provider("rate limit (429)".into()));
        }
        if !(200..300).contains(&status) {
            return Err(Error::Provider(format!("provider returned status {status}")));
        }
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Provider(format!("response body: {e}")))?;
        let text = value
            .get("text")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Provider("response missing text field".into()))?
            .to_string();
        Ok(ProviderResponse {
            text,
            prompt_tokens: value
                .get("prompt_tokens")
                .and_then(Value::as_u64)
                .unwrap_or(0) as u32,
            completion_tokens: value
                .get("completion_tokens")
                .and_then(Value::as_u64)
                .unwrap_or(0) as u32,
            latency_ms: started.elapsed().as_millis() as u64,
            provider_id: "live".into(),
        })
    }
}

/// Global requests-per-minute limiter shared across workers.
pub struct RateLimiter {
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(rpm: u32) -> Self {
        Self {
            min_interval: Duration::from_secs_f64(60.0 / rpm.max(1) as f64),
            last: Mutex::new(None),
        }
    }

    /// Block until the next request slot, then claim it.
    pub fn acquire(&self) {
        let wait = {
            let mut last = self.last.lock().unwrap();
            let now = Instant::now();
            let ready = match *last {
                Some(prev) => prev + self.min_interval,
                None => now,
            };
            *last = Some(ready.max(now));
            ready.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}
