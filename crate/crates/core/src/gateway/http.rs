use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{CompletionClient, CompletionRequest, CompletionResponse, GatewayError};

#[derive(Debug, Clone)]
pub struct HttpConfig {
    /// Base URL up to and including the API version, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    /// Name of the environment variable holding the bearer token. `None` sends no
    /// `Authorization` header (local servers).
    pub api_key_env: Option<String>,
    pub timeout: Duration,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub backoff_max: Duration,
    pub max_in_flight: usize,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpConfig {
            base_url: base_url.into(),
            api_key_env: None,
            timeout: Duration::from_secs(120),
            max_retries: 4,
            backoff_base: Duration::from_millis(500),
            backoff_max: Duration::from_secs(30),
            max_in_flight: 4,
        }
    }
}

/// Counting semaphore bounding concurrent provider requests.
struct Slots {
    free: Mutex<usize>,
    released: Condvar,
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock");
        while *free == 0 {
            free = self.released.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock") += 1;
        self.0.released.notify_one();
    }
}

/// OpenAI-compatible `/chat/completions` client with bounded exponential-backoff retries.
pub struct HttpClient {
    config: HttpConfig,
    agent: ureq::Agent,
    label: String,
    calls: AtomicU64,
    slots: Slots,
}

enum Attempt {
    Done(Result<String, GatewayError>),
    Retry(GatewayError),
}

impl HttpClient {
    pub fn new(config: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let label = format!("http:{}", config.base_url.trim_end_matches('/'));
        let slots = Slots { free: Mutex::new(config.max_in_flight.max(1)), released: Condvar::new() };
        HttpClient { config, agent, label, calls: AtomicU64::new(0), slots }
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn api_key(&self) -> Result<Option<String>, GatewayError> {
        match &self.config.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| GatewayError::Auth(format!("environment variable {var} is not set"))),
        }
    }

    fn attempt(&self, body: &Value, key: Option<&str>) -> Attempt {
        let _slot = self.slots.acquire();
        self.calls.fetch_add(1, Ordering::SeqCst);
        let mut request = self.agent.post(&self.endpoint()).header("Content-Type", "application/json");
        if let Some(key) = key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match request.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(GatewayError::Timeout { attempts: 0 }),
            Err(e) => return Attempt::Retry(GatewayError::Transport(e.to_string())),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(GatewayError::Timeout { attempts: 0 }),
            Err(e) => return Attempt::Retry(GatewayError::Transport(e.to_string())),
        };
        match status {
            200..=299 => Attempt::Done(extract_content(&text)),
            401 | 403 => Attempt::Done(Err(GatewayError::Auth(format!("HTTP {status}: {}", snippet(&text))))),
            429 => Attempt::Retry(GatewayError::RateLimited { attempts: 0 }),
            408 => Attempt::Retry(GatewayError::Timeout { attempts: 0 }),
            500..=599 => Attempt::Retry(GatewayError::Provider { status, body: snippet(&text) }),
            _ => Attempt::Done(Err(GatewayError::Provider { status, body: snippet(&text) })),
        }
    }

    fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry).unwrap_or(u32::MAX);
        self.config.backoff_base.saturating_mul(factor).min(self.config.backoff_max)
    }
}

fn snippet(text: &str) -> String {
    text.chars().take(200).collect()
}

fn extract_content(body: &str) -> Result<String, GatewayError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| GatewayError::MalformedProviderReply(format!("invalid JSON: {e}")))?;
    let content = value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::MalformedProviderReply("missing choices[0].message.content".into()))?;
    if content.trim().is_empty() {
        return Err(GatewayError::MalformedProviderReply("empty completion".into()));
    }
    Ok(content.to_string())
}

impl CompletionClient for HttpClient {
    fn label(&self) -> &str {
        &self.label
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        let started = Instant::now();
        let key = self.api_key()?;
        let body = json!({
            "model": req.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
            "top_p": req.top_p,
        });
        let attempts = self.config.max_retries + 1;
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff(attempt - 1));
            }
            match self.attempt(&body, key.as_deref()) {
                Attempt::Done(result) => {
                    let text = result?;
                    return Ok(CompletionResponse {
                        text,
                        provider: self.label.clone(),
                        latency: started.elapsed(),
                        from_cache: false,
                    });
                }
                Attempt::Retry(err) => {
                    log::warn!("{}: attempt {} of {attempts} failed: {err}", self.label, attempt + 1);
                    last = Some(err);
                }
            }
        }
        Err(match last.expect("at least one attempt") {
            GatewayError::Timeout { .. } => GatewayError::Timeout { attempts },
            GatewayError::RateLimited { .. } => GatewayError::RateLimited { attempts },
            other => other,
        })
    }

    fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}
