//! Vision-language backend gateway.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use climcheck_core::{parse_verdict, ModelResponse, Outcome, PromptSpec, Scheme};
use thiserror::Error;

use crate::error::RunError;
use crate::retry::RetryPolicy;

pub mod live;
pub mod scripted;

pub use live::LiveBackend;
pub use scripted::ScriptedBackend;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedImage {
    pub mime: &'static str,
    pub data_base64: String,
}

impl EncodedImage {
    pub fn data_url(&self) -> String {
        format!("data:{};base64,{}", self.mime, self.data_base64)
    }
}

fn mime_for(path: &Path) -> &'static str {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        _ => "application/octet-stream",
    }
}

pub fn encode_image(path: &Path) -> std::io::Result<EncodedImage> {
    let bytes = fs::read(path)?;
    Ok(EncodedImage { mime: mime_for(path), data_base64: STANDARD.encode(bytes) })
}

/// One backend call.
#[derive(Debug, Clone)]
pub struct CompletionRequest<'a> {
    pub sample_id: &'a str,
    /// Evidence setting of the run (`internal`, `combination`, ...), or empty
    /// for calls that do not depend on one.
    pub variant: &'a str,
    pub prompt: &'a PromptSpec,
    pub images: Vec<EncodedImage>,
    pub temperature: f64,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    /// Network-level failure; worth retrying.
    #[error("transport failure: {0}")]
    Transport(String),
    /// The backend answered but refused the request, or no reply exists.
    #[error("request rejected: {0}")]
    Rejected(String),
}

impl BackendError {
    pub fn is_transport(&self) -> bool {
        matches!(self, BackendError::Transport(_))
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ModelResponse, BackendError>;
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub response: Result<ModelResponse, BackendError>,
    pub attempts: u32,
}

impl Completion {
    /// Parse the reply, or turn a failed call into a backend-failure
    /// fallback.
    pub fn outcome(&self, scheme: Scheme) -> Outcome {
        match &self.response {
            Ok(r) => parse_verdict(&r.raw_text, scheme),
            Err(e) => Outcome::backend_failure(e.to_string()),
        }
    }

    pub fn usage(&self) -> (u64, u64, f64) {
        match &self.response {
            Ok(r) => (r.prompt_tokens, r.completion_tokens, r.latency_s),
            Err(_) => (0, 0, 0.0),
        }
    }
}

/// Send `prompt` with its images (resolved against `image_base`) to the
/// backend, retrying transport failures. An unreadable image is an error
/// raised before any call is made.
pub fn complete(
    backend: &dyn Backend,
    prompt: &PromptSpec,
    image_base: &Path,
    sample_id: &str,
    variant: &str,
    temperature: f64,
    retry: &RetryPolicy,
) -> Result<Completion, RunError> {
    let images = prompt
        .image_refs
        .iter()
        .map(|r| {
            let path = image_base.join(r);
            encode_image(&path).map_err(|source| RunError::Image { path, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let request = CompletionRequest { sample_id, variant, prompt, images, temperature };
    let (response, attempts) = retry.run(|_| backend.complete(&request), BackendError::is_transport);
    if let Err(e) = &response {
        tracing::warn!(sample_id, template = %prompt.template_id, attempts, "backend call failed: {e}");
    }
    Ok(Completion { response, attempts })
}
