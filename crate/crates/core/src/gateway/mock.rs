use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CompletionClient, CompletionRequest, CompletionResponse, GatewayError};
use crate::answers::{adversarial_answer, oracle_answer};
use crate::context;
use crate::task::TaskInstance;

/// Prompt text to the instance it was rendered from. Oracle-backed mocks
/// answer from the instance's ground truth.
#[derive(Debug, Default)]
pub struct AnswerKey {
    entries: RwLock<HashMap<String, TaskInstance>>,
}

impl AnswerKey {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, prompt: impl Into<String>, instance: TaskInstance) {
        self.entries.write().expect("answer key lock").insert(prompt.into(), instance);
    }

    pub fn get(&self, prompt: &str) -> Option<TaskInstance> {
        self.entries.read().expect("answer key lock").get(prompt).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("answer key lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MockKind {
    /// Correct answers, except a seeded fraction `error_rate` answered wrongly.
    Oracle { error_rate: f64, seed: u64 },
    /// Always wrong.
    Adversarial,
}

/// Deterministic provider backed by an [`AnswerKey`].
///
/// Besides instance prompts it understands consolidation prompts (the drafts
/// are returned joined under a header) and draft requests.
pub struct MockProvider {
    kind: MockKind,
    key: Arc<AnswerKey>,
    label: String,
    calls: AtomicU64,
}

impl MockProvider {
    pub fn new(kind: MockKind, key: Arc<AnswerKey>) -> Self {
        let label = match kind {
            MockKind::Oracle { .. } => "mock-oracle",
            MockKind::Adversarial => "mock-adversarial",
        };
        MockProvider { kind, key, label: label.to_string(), calls: AtomicU64::new(0) }
    }

    pub fn oracle(key: Arc<AnswerKey>) -> Self {
        Self::new(MockKind::Oracle { error_rate: 0.0, seed: 0 }, key)
    }

    pub fn adversarial(key: Arc<AnswerKey>) -> Self {
        Self::new(MockKind::Adversarial, key)
    }

    fn reply(&self, prompt: &str) -> Result<String, GatewayError> {
        if let Some(inst) = self.key.get(prompt) {
            let wrong = match self.kind {
                MockKind::Adversarial => true,
                MockKind::Oracle { error_rate, seed } => error_rate > 0.0 && unit_hash(seed, prompt) < error_rate,
            };
            return Ok(if wrong { adversarial_answer(&inst) } else { oracle_answer(&inst) });
        }
        if let Some(drafts) = context::parse_consolidation_prompt(prompt) {
            return Ok(context::join_drafts(&drafts));
        }
        if let Some((task, source)) = context::parse_draft_request(prompt) {
            return Ok(format!(
                "Context for {} questions ({source}): {}",
                task.title().to_lowercase(),
                context::task_summary(task)
            ));
        }
        let digest = hex::encode(Sha256::digest(prompt.as_bytes()));
        Err(GatewayError::MalformedProviderReply(format!("mock has no answer for prompt {}", &digest[..12])))
    }
}

/// Uniform value in [0, 1) derived from the seed and prompt.
fn unit_hash(seed: u64, prompt: &str) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(prompt.as_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(head) >> 11) as f64 / (1u64 << 53) as f64
}

impl CompletionClient for MockProvider {
    fn label(&self) -> &str {
        &self.label
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        let started = Instant::now();
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = self.reply(&req.prompt)?;
        Ok(CompletionResponse { text, provider: self.label.clone(), latency: started.elapsed(), from_cache: false })
    }

    fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Replays a fixed transcript, one response per call, in order.
pub struct ScriptedMock {
    responses: Vec<String>,
    cursor: Mutex<usize>,
    calls: AtomicU64,
}

impl ScriptedMock {
    pub fn new(responses: Vec<String>) -> Self {
        ScriptedMock { responses, cursor: Mutex::new(0), calls: AtomicU64::new(0) }
    }

    /// A JSON array of response strings.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }
}

impl CompletionClient for ScriptedMock {
    fn label(&self) -> &str {
        "mock-script"
    }

    fn complete(&self, _req: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        let started = Instant::now();
        self.calls.fetch_add(1, Ordering::SeqCst);
        let mut cursor = self.cursor.lock().expect("script cursor lock");
        let text = self
            .responses
            .get(*cursor)
            .cloned()
            .ok_or(GatewayError::ScriptExhausted(self.responses.len()))?;
        *cursor += 1;
        Ok(CompletionResponse { text, provider: "mock-script".into(), latency: started.elapsed(), from_cache: false })
    }

    fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}
