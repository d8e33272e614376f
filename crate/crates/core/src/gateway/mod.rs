//! Single-shot completion clients: an OpenAI-compatible HTTP adapter,
//! deterministic mocks, and an on-disk response cache.

mod cache;
mod http;
mod mock;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use cache::{cached_complete, ResponseCache};
pub use http::{HttpClient, HttpConfig};
pub use mock::{AnswerKey, MockKind, MockProvider, ScriptedMock};

pub const DEFAULT_MAX_TOKENS: u32 = 512;
pub const DEFAULT_TEMPERATURE: f64 = 0.001;
pub const DEFAULT_TOP_P: f64 = 0.95;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("provider timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("malformed provider reply: {0}")]
    MalformedProviderReply(String),
    #[error("scripted transcript exhausted after {0} response(s)")]
    ScriptExhausted(usize),
    #[error("provider returned HTTP {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cache entry {key}: {message}")]
    CacheIo { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
}

impl CompletionRequest {
    /// Request with the benchmark decoding defaults.
    pub fn new(model: impl Into<String>, prompt: impl Into<String>) -> Self {
        CompletionRequest {
            model: model.into(),
            prompt: prompt.into(),
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
            top_p: DEFAULT_TOP_P,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_tokens < 1 {
            return Err(GatewayError::InvalidRequest("max_tokens must be >= 1".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest(format!("temperature {} must be >= 0", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GatewayError::InvalidRequest(format!("top_p {} must be in (0, 1]", self.top_p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResponse {
    pub text: String,
    pub provider: String,
    pub latency: Duration,
    pub from_cache: bool,
}

/// A provider that answers one prompt with one completion.
pub trait CompletionClient: Send + Sync {
    fn label(&self) -> &str;

    /// One logical completion. Implementations count every provider round trip.
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, GatewayError>;

    /// Provider round trips made so far.
    fn call_count(&self) -> u64;
}

/// Validates the request, then delegates to the client.
pub fn complete(client: &dyn CompletionClient, req: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
    req.validate()?;
    client.complete(req)
}
