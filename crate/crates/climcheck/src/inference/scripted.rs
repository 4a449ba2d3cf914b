//! Deterministic replay backend.
//!
//! Replies live in a directory as `<sample_id>__<template_id>.json`, each a
//! JSON object with `raw_text`, `prompt_tokens`, `completion_tokens` and
//! `latency_s`. A reply placed under a subdirectory named after an evidence
//! setting (`internal/`, `combination/`, ...) takes precedence for runs
//! with that setting.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use climcheck_core::ModelResponse;

use super::{Backend, BackendError, CompletionRequest};
use crate::error::ConfigError;

#[derive(Debug, Default)]
pub struct ScriptedBackend {
    replies: HashMap<String, ModelResponse>,
    calls: AtomicUsize,
}

fn load_dir(dir: &Path, prefix: &str, out: &mut HashMap<String, ModelResponse>) -> Result<(), ConfigError> {
    let read_err = |source| ConfigError::Read { path: dir.to_path_buf(), source };
    let mut entries: Vec<_> = fs::read_dir(dir).map_err(read_err)?.collect::<Result<_, _>>().map_err(read_err)?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.is_dir() {
            if prefix.is_empty() {
                load_dir(&path, &name, out)?;
            }
            continue;
        }
        let Some(stem) = name.strip_suffix(".json") else { continue };
        let text = fs::read_to_string(&path).map_err(|source| ConfigError::Read { path: path.clone(), source })?;
        let reply: ModelResponse = serde_json::from_str(&text)
            .map_err(|e| ConfigError::Parse { path: path.clone(), message: e.to_string() })?;
        if reply.latency_s < 0.0 {
            return Err(ConfigError::Parse { path, message: "negative latency".into() });
        }
        let key = if prefix.is_empty() { stem.to_string() } else { format!("{prefix}/{stem}") };
        out.insert(key, reply);
    }
    Ok(())
}

impl ScriptedBackend {
    pub fn load(dir: &Path) -> Result<Self, ConfigError> {
        let mut replies = HashMap::new();
        load_dir(dir, "", &mut replies)?;
        Ok(ScriptedBackend { replies, calls: AtomicUsize::new(0) })
    }

    pub fn from_replies(replies: impl IntoIterator<Item = (String, ModelResponse)>) -> Self {
        ScriptedBackend { replies: replies.into_iter().collect(), calls: AtomicUsize::new(0) }
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }

    /// Number of `complete` calls served so far, hits and misses alike.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn key(sample_id: &str, template_id: &str) -> String {
        format!("{sample_id}__{template_id}")
    }
}

impl Backend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ModelResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = Self::key(request.sample_id, &request.prompt.template_id);
        let specific = (!request.variant.is_empty()).then(|| format!("{}/{key}", request.variant));
        specific
            .and_then(|k| self.replies.get(&k))
            .or_else(|| self.replies.get(&key))
            .cloned()
            .ok_or_else(|| BackendError::Rejected(format!("no scripted reply for `{key}`")))
    }
}
