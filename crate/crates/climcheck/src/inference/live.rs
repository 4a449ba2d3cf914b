//! Chat-completions backend over HTTPS.

use std::time::{Duration, Instant};

use climcheck_core::ModelResponse;
use serde_json::{json, Value};

use super::{Backend, BackendError, CompletionRequest};
use crate::config::LiveBackendSettings;
use crate::error::ConfigError;
use crate::http::{self, HttpError};

pub const API_KEY_VAR: &str = "VLM_API_KEY";

pub struct LiveBackend {
    agent: ureq::Agent,
    settings: LiveBackendSettings,
    api_key: String,
    trace: bool,
}

impl LiveBackend {
    pub fn new(settings: LiveBackendSettings, api_key: String, trace: bool) -> Self {
        LiveBackend { agent: http::agent(Duration::from_secs(settings.timeout_s)), settings, api_key, trace }
    }

    pub fn from_env(settings: LiveBackendSettings, trace: bool) -> Result<Self, ConfigError> {
        let key = std::env::var(API_KEY_VAR).map_err(|_| ConfigError::Invalid(format!("{API_KEY_VAR} is not set")))?;
        Ok(LiveBackend::new(settings, key, trace))
    }
}

pub fn request_body(model: &str, request: &CompletionRequest<'_>) -> Value {
    let mut content = vec![json!({ "type": "text", "text": request.prompt.user_text })];
    for image in &request.images {
        content.push(json!({ "type": "image_url", "image_url": { "url": image.data_url() } }));
    }
    json!({
        "model": model,
        "temperature": request.temperature,
        "messages": [
            { "role": "system", "content": request.prompt.system_text },
            { "role": "user", "content": content },
        ],
    })
}

/// Copy of `body` with inline image data replaced by its length.
pub fn redact(body: &Value) -> Value {
    match body {
        Value::String(s) if s.starts_with("data:") => Value::String(format!("<inline data, {} bytes>", s.len())),
        Value::Array(items) => Value::Array(items.iter().map(redact).collect()),
        Value::Object(map) => Value::Object(map.iter().map(|(k, v)| (k.clone(), redact(v))).collect()),
        other => other.clone(),
    }
}

pub fn parse_response(body: &Value, latency_s: f64) -> Result<ModelResponse, BackendError> {
    let raw_text = body
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::Rejected("response has no message content".into()))?;
    let usage = |field: &str| body.pointer(&format!("/usage/{field}")).and_then(Value::as_u64).unwrap_or(0);
    Ok(ModelResponse {
        raw_text: raw_text.to_string(),
        prompt_tokens: usage("prompt_tokens"),
        completion_tokens: usage("completion_tokens"),
        latency_s,
    })
}

impl Backend for LiveBackend {
    fn name(&self) -> &str {
        "live"
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ModelResponse, BackendError> {
        let body = request_body(&self.settings.model, request);
        if self.trace {
            tracing::info!(target: "climcheck::trace", endpoint = %self.settings.endpoint, body = %redact(&body), "request");
        }
        let auth = format!("Bearer {}", self.api_key);
        let started = Instant::now();
        let response = http::post_json(&self.agent, &self.settings.endpoint, &[("Authorization", &auth)], &body)
            .map_err(|e| match e {
                HttpError::Transport(m) => BackendError::Transport(m),
                HttpError::Rejected(m) => BackendError::Rejected(m),
            })?;
        let latency = started.elapsed().as_secs_f64();
        if self.trace {
            tracing::info!(target: "climcheck::trace", body = %response, "response");
        }
        parse_response(&response, latency)
    }
}
