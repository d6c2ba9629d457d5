//! Chat-completion calls: live HTTP, replay, retries, caching and batches.

mod cache;
mod http;

pub use cache::{Cache, CacheEntry, ReplayBackend};
pub use http::HttpBackend;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use url::Url;

use crate::prompt::{sha256_hex, RenderedPrompt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThinkingBudget {
    Tokens(u32),
    Level(String),
}

/// Sampling overrides; `None` leaves the provider default in place.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    pub endpoint: Url,
    pub max_output_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinking_budget: Option<ThinkingBudget>,
    #[serde(default)]
    pub sampling: Sampling,
    /// Name of the environment variable holding the API key; empty means no auth header.
    pub api_key_env: String,
    /// Extra top-level request fields, passed through as-is.
    #[serde(default)]
    pub extensions: BTreeMap<String, Value>,
    pub timeout_secs: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("endpoint '{0}' is not an absolute URL")]
    Endpoint(String),
    #[error("max_output_tokens must be at least 1")]
    MaxTokens,
    #[error("parallelism must be at least 1")]
    Parallelism,
}

impl ModelConfig {
    pub fn new(model_id: impl Into<String>, endpoint: &str) -> Result<ModelConfig, ConfigError> {
        let endpoint =
            Url::parse(endpoint).map_err(|_| ConfigError::Endpoint(endpoint.to_string()))?;
        if !endpoint.has_host() {
            return Err(ConfigError::Endpoint(endpoint.to_string()));
        }
        Ok(ModelConfig {
            model_id: model_id.into(),
            endpoint,
            max_output_tokens: 32768,
            thinking_budget: None,
            sampling: Sampling::default(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            extensions: BTreeMap::new(),
            timeout_secs: 600,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_output_tokens == 0 {
            return Err(ConfigError::MaxTokens);
        }
        if !self.endpoint.has_host() {
            return Err(ConfigError::Endpoint(self.endpoint.to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub request_digest: String,
    pub text: String,
    pub finish_reason: String,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_usage: Option<TokenUsage>,
}

/// Everything that goes over the wire for one call.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub digest: String,
    pub prompt: String,
    pub model: ModelConfig,
}

#[derive(Serialize)]
struct DigestInput<'a> {
    template_digest: &'a str,
    prompt: &'a str,
    model_id: &'a str,
    max_output_tokens: u32,
    thinking_budget: &'a Option<ThinkingBudget>,
    sampling: &'a Sampling,
    extensions: &'a BTreeMap<String, Value>,
}

/// Content address of a request. Endpoint, key variable and timeout do not
/// take part, so the same prompt hits the same cache entry across providers
/// serving the same model id.
pub fn request_digest(prompt: &RenderedPrompt, cfg: &ModelConfig) -> String {
    let input = DigestInput {
        template_digest: &prompt.template_digest,
        prompt: &prompt.text,
        model_id: &cfg.model_id,
        max_output_tokens: cfg.max_output_tokens,
        thinking_budget: &cfg.thinking_budget,
        sampling: &cfg.sampling,
        extensions: &cfg.extensions,
    };
    sha256_hex(
        serde_json::to_string(&input)
            .expect("digest input serializes")
            .as_bytes(),
    )
}

/// What a backend hands back; `latency_ms` is set by backends that replay
/// stored timings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendReply {
    pub text: String,
    pub finish_reason: String,
    pub token_usage: Option<TokenUsage>,
    pub latency_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("context length exceeded: {0}")]
    ContextLength(String),
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("no replay entry for digest {0}")]
    ReplayMiss(String),
}

pub trait Backend: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    ExhaustedRetries,
    Auth,
    ContextLength,
    Rejected,
    ReplayMiss,
}

impl FailureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::ExhaustedRetries => "exhausted_retries",
            FailureKind::Auth => "auth",
            FailureKind::ContextLength => "context_length",
            FailureKind::Rejected => "rejected",
            FailureKind::ReplayMiss => "replay_miss",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{} after {attempts} attempt(s): {message}", kind.as_str())]
pub struct GatewayError {
    pub kind: FailureKind,
    pub message: String,
    pub attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            initial_delay: Duration::from_secs(2),
            max_delay: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(max_attempts: u32) -> RetryPolicy {
        RetryPolicy {
            max_attempts,
            initial_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    /// Wait before attempt `attempt + 1`, doubling from `initial_delay`.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt.saturating_sub(1));
        self.initial_delay
            .saturating_mul(factor)
            .min(self.max_delay)
    }
}

/// One manifest line per request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub digest: String,
    pub model: String,
    pub attempts: u32,
    /// `ok`, `cached`, or a failure kind.
    pub outcome: String,
}

pub type CallResult = Result<Completion, GatewayError>;

pub struct Gateway {
    backend: Box<dyn Backend>,
    cache: Option<Cache>,
    retry: RetryPolicy,
}

impl Gateway {
    pub fn new(backend: Box<dyn Backend>, cache: Option<Cache>, retry: RetryPolicy) -> Gateway {
        Gateway {
            backend,
            cache,
            retry,
        }
    }

    pub fn complete(&self, prompt: &RenderedPrompt, cfg: &ModelConfig) -> CallResult {
        self.complete_logged(prompt, cfg).0
    }

    /// Cache lookup, then the backend with retries on transient errors. A
    /// successful completion is stored before it is returned.
    pub fn complete_logged(
        &self,
        prompt: &RenderedPrompt,
        cfg: &ModelConfig,
    ) -> (CallResult, ManifestEntry) {
        let digest = request_digest(prompt, cfg);
        let entry = |attempts: u32, outcome: &str| ManifestEntry {
            digest: digest.clone(),
            model: cfg.model_id.clone(),
            attempts,
            outcome: outcome.to_string(),
        };
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&digest)) {
            return (Ok(hit.completion), entry(0, "cached"));
        }
        let request = ChatRequest {
            digest: digest.clone(),
            prompt: prompt.text.clone(),
            model: cfg.clone(),
        };
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let started = Instant::now();
            let fail = |kind: FailureKind, message: String| {
                (
                    Err(GatewayError {
                        kind,
                        message,
                        attempts: attempt,
                    }),
                    entry(attempt, kind.as_str()),
                )
            };
            match self.backend.send(&request) {
                Ok(reply) => {
                    let completion = Completion {
                        request_digest: digest.clone(),
                        text: reply.text,
                        finish_reason: reply.finish_reason,
                        latency_ms: reply
                            .latency_ms
                            .unwrap_or_else(|| started.elapsed().as_millis() as u64),
                        token_usage: reply.token_usage,
                    };
                    if let Some(cache) = &self.cache {
                        let stored = CacheEntry {
                            digest: digest.clone(),
                            model_id: cfg.model_id.clone(),
                            template_name: prompt.template_name,
                            template_digest: prompt.template_digest.clone(),
                            completion: completion.clone(),
                        };
                        if let Err(e) = cache.put(&stored) {
                            return fail(FailureKind::Rejected, format!("cache write failed: {e}"));
                        }
                    }
                    return (Ok(completion), entry(attempt, "ok"));
                }
                Err(BackendError::Transient(msg)) => {
                    if attempt >= max_attempts {
                        return fail(FailureKind::ExhaustedRetries, msg);
                    }
                    std::thread::sleep(self.retry.delay(attempt));
                }
                Err(BackendError::Auth(msg)) => return fail(FailureKind::Auth, msg),
                Err(BackendError::ContextLength(msg)) => {
                    return fail(FailureKind::ContextLength, msg)
                }
                Err(BackendError::Rejected(msg)) => return fail(FailureKind::Rejected, msg),
                Err(e @ BackendError::ReplayMiss(_)) => {
                    return fail(FailureKind::ReplayMiss, e.to_string())
                }
            }
        }
    }
}

/// Results and manifest lines, both in input order.
#[derive(Debug, Clone, Default)]
pub struct BatchResult {
    pub completions: Vec<CallResult>,
    pub manifest: Vec<ManifestEntry>,
}

/// Completes every item with at most `parallelism` calls in flight. A failed
/// item never stops the others.
pub fn run_batch(
    gateway: &Gateway,
    items: &[RenderedPrompt],
    cfg: &ModelConfig,
    parallelism: usize,
) -> Result<BatchResult, ConfigError> {
    if parallelism == 0 {
        return Err(ConfigError::Parallelism);
    }
    let slots: Vec<Mutex<Option<(CallResult, ManifestEntry)>>> =
        items.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = parallelism.min(items.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let out = gateway.complete_logged(&items[i], cfg);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    let mut result = BatchResult::default();
    for slot in slots {
        let (completion, entry) = slot
            .into_inner()
            .expect("slot lock")
            .expect("every item visited");
        result.completions.push(completion);
        result.manifest.push(entry);
    }
    Ok(result)
}
