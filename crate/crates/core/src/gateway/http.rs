use std::time::Duration;

use serde_json::{json, Map, Value};

use super::{Backend, BackendError, BackendReply, ChatRequest, TokenUsage};

/// OpenAI-compatible chat-completions over HTTP(S).
pub struct HttpBackend {
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new() -> Result<HttpBackend, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| BackendError::Rejected(format!("cannot build HTTP client: {e}")))?;
        Ok(HttpBackend { client })
    }
}

pub(crate) fn request_body(request: &ChatRequest) -> Value {
    let cfg = &request.model;
    let mut body = Map::new();
    body.insert("model".into(), json!(cfg.model_id));
    body.insert(
        "messages".into(),
        json!([{ "role": "user", "content": request.prompt }]),
    );
    body.insert("max_tokens".into(), json!(cfg.max_output_tokens));
    if let Some(t) = cfg.sampling.temperature {
        body.insert("temperature".into(), json!(t));
    }
    if let Some(p) = cfg.sampling.top_p {
        body.insert("top_p".into(), json!(p));
    }
    if let Some(s) = cfg.sampling.seed {
        body.insert("seed".into(), json!(s));
    }
    for (k, v) in &cfg.extensions {
        body.insert(k.clone(), v.clone());
    }
    Value::Object(body)
}

fn looks_like_context_length(body: &str) -> bool {
    let lower = body.to_ascii_lowercase();
    lower.contains("context_length")
        || lower.contains("context length")
        || lower.contains("maximum context")
}

pub(crate) fn classify_status(status: u16, body: &str) -> BackendError {
    let snippet: String = body.chars().take(500).collect();
    let msg = format!("HTTP {status}: {snippet}");
    match status {
        401 | 403 => BackendError::Auth(msg),
        408 | 409 | 425 | 429 => BackendError::Transient(msg),
        400 | 413 if looks_like_context_length(body) => BackendError::ContextLength(msg),
        s if s >= 500 => BackendError::Transient(msg),
        _ => BackendError::Rejected(msg),
    }
}

pub(crate) fn parse_reply(body: &Value) -> Result<BackendReply, BackendError> {
    let choice = body
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| BackendError::Rejected("response has no choices".into()))?;
    let text = match choice.pointer("/message/content") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(parts)) => parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join(""),
        _ => String::new(),
    };
    let finish_reason = choice
        .get("finish_reason")
        .and_then(Value::as_str)
        .unwrap_or("unknown")
        .to_string();
    let token_usage = body.get("usage").map(|u| TokenUsage {
        prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64),
        completion_tokens: u.get("completion_tokens").and_then(Value::as_u64),
        total_tokens: u.get("total_tokens").and_then(Value::as_u64),
    });
    Ok(BackendReply {
        text,
        finish_reason,
        token_usage,
        latency_ms: None,
    })
}

impl Backend for HttpBackend {
    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError> {
        let cfg = &request.model;
        let mut builder = self
            .client
            .post(cfg.endpoint.clone())
            .timeout(Duration::from_secs(cfg.timeout_secs.max(1)))
            .json(&request_body(request));
        if !cfg.api_key_env.is_empty() {
            let key = std::env::var(&cfg.api_key_env).map_err(|_| {
                BackendError::Auth(format!(
                    "environment variable {} is not set",
                    cfg.api_key_env
                ))
            })?;
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                BackendError::Transient(e.to_string())
            } else {
                BackendError::Rejected(e.to_string())
            }
        })?;
        let status = response.status().as_u16();
        let text = response
            .text()
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, &text));
        }
        let body: Value = serde_json::from_str(&text)
            .map_err(|e| BackendError::Rejected(format!("response is not JSON: {e}")))?;
        parse_reply(&body)
    }
}
