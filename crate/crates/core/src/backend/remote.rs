//! Chat-completions HTTP client.
//!
//! Request body: `{"model", "temperature", "messages": [{"role": "user",
//! "content": <prompt>}]}`; the answer is read from
//! `choices[0].message.content`. The bearer token comes from the environment
//! variable named in [`RemoteConfig::auth_env`].

use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::chat::{ChatBackend, ChatTransport};
use super::BackendError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token; `None` sends no
    /// authorization header.
    pub auth_env: Option<String>,
    pub timeout_secs: u64,
    pub retry_budget: u32,
    pub requests_per_minute: Option<f64>,
    /// Base delay between transport retries, doubled per attempt.
    pub backoff_ms: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            model: "gpt-3.5-turbo-0613".to_string(),
            auth_env: Some("OPENAI_API_KEY".to_string()),
            timeout_secs: 120,
            retry_budget: 3,
            requests_per_minute: None,
            backoff_ms: 1000,
        }
    }
}

/// Spaces calls at least `interval` apart. Shared across clients via `Arc`.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Instant>,
}

impl RateLimiter {
    pub fn new(interval: Duration) -> Self {
        RateLimiter {
            interval,
            next_slot: Mutex::new(Instant::now()),
        }
    }

    pub fn per_minute(requests: f64) -> Arc<Self> {
        let interval = if requests > 0.0 {
            Duration::from_secs_f64(60.0 / requests)
        } else {
            Duration::ZERO
        };
        Arc::new(Self::new(interval))
    }

    /// Blocks until the caller's slot arrives.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.interval;
            slot - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

pub fn chat_payload(model: &str, prompt: &str, temperature: f64) -> Value {
    json!({
        "model": model,
        "temperature": temperature,
        "messages": [{ "role": "user", "content": prompt }],
    })
}

fn extract_content(body: &str) -> Result<String, BackendError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| BackendError::MalformedPayload(format!("not JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| BackendError::MalformedPayload("missing choices[0].message.content".into()))
}

pub struct HttpTransport {
    config: RemoteConfig,
    agent: ureq::Agent,
    token: Option<String>,
    limiter: Option<Arc<RateLimiter>>,
}

impl HttpTransport {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        let token = match &config.auth_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                BackendError::Auth(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = config.requests_per_minute.map(RateLimiter::per_minute);
        Ok(HttpTransport {
            config,
            agent,
            token,
            limiter,
        })
    }

    pub fn set_rate_limiter(&mut self, limiter: Arc<RateLimiter>) {
        self.limiter = Some(limiter);
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self.config.backoff_ms.saturating_mul(1 << attempt.min(5));
        Duration::from_millis(ms.min(30_000))
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&mut self, prompt: &str, temperature: f64) -> Result<String, BackendError> {
        let payload = chat_payload(&self.config.model, prompt, temperature);
        let attempts = self.config.retry_budget + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.backoff(attempt - 1));
            }
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            let mut request = self.agent.post(&self.config.endpoint);
            if let Some(token) = &self.token {
                request = request.header("Authorization", &format!("Bearer {token}"));
            }
            let mut response = match request.send_json(&payload) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!(
                        "attempt {} to {} failed: {e}",
                        attempt + 1,
                        self.config.endpoint
                    );
                    last = e.to_string();
                    continue;
                }
            };
            let status = response.status().as_u16();
            let body = response.body_mut().read_to_string().unwrap_or_default();
            match status {
                200..=299 => return extract_content(&body),
                401 | 403 => return Err(BackendError::Auth(format!("HTTP {status}: {body}"))),
                408 | 429 | 500..=599 => {
                    log::warn!("attempt {} got HTTP {status}", attempt + 1);
                    last = format!("HTTP {status}");
                }
                _ => return Err(BackendError::Http { status, body }),
            }
        }
        Err(BackendError::Transport {
            attempts,
            message: last,
        })
    }
}

/// Chat backend over HTTP; content retries and transport retries both use
/// `config.retry_budget`.
pub fn remote_chat_backend(
    config: RemoteConfig,
) -> Result<ChatBackend<HttpTransport>, BackendError> {
    let retries = config.retry_budget;
    Ok(ChatBackend::new(
        "remote",
        HttpTransport::new(config)?,
        retries,
    ))
}
