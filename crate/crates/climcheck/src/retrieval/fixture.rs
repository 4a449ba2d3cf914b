//! Replay providers backed by recorded payloads on disk.
//!
//! Layout: `<dir>/<source_key>/<sample_id>.json`, holding the raw provider
//! payload for that source. A missing file is an empty response. A file of
//! the form `{"transport_error": "..."}` or `{"provider_error": "..."}`
//! replays the corresponding failure.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use climcheck_core::SourceKind;
use serde::de::DeserializeOwned;
use serde_json::Value;

use super::sources::{
    FactCheckProvider, FactCheckResponse, ImageSearchProvider, ImageSearchResponse, WebSearchProvider,
    WebSearchResponse,
};
use super::{ClientError, Query};

#[derive(Debug, Clone)]
pub struct FixtureProvider {
    dir: PathBuf,
}

impl FixtureProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureProvider { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn load<T: DeserializeOwned + Default>(&self, source: SourceKind, sample_id: &str) -> Result<T, ClientError> {
        // Errors name the path relative to the fixture root so that cached
        // failures do not depend on where the fixtures live.
        let name = format!("{}/{sample_id}.json", source.key());
        let text = match fs::read_to_string(self.dir.join(&name)) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(T::default()),
            Err(e) => return Err(ClientError::Transport(format!("{name}: {e}"))),
        };
        let value: Value = serde_json::from_str(&text).map_err(|e| ClientError::Provider(format!("{name}: {e}")))?;
        if let Some(m) = value.get("transport_error").and_then(Value::as_str) {
            return Err(ClientError::Transport(m.to_string()));
        }
        if let Some(m) = value.get("provider_error").and_then(Value::as_str) {
            return Err(ClientError::Provider(m.to_string()));
        }
        serde_json::from_value(value).map_err(|e| ClientError::Provider(format!("{name}: {e}")))
    }
}

impl ImageSearchProvider for FixtureProvider {
    fn reverse_search(&self, query: &Query<'_>) -> Result<ImageSearchResponse, ClientError> {
        self.load(SourceKind::ReverseImage, &query.sample.id)
    }
}

impl WebSearchProvider for FixtureProvider {
    fn search(&self, query: &Query<'_>, _text: &str) -> Result<WebSearchResponse, ClientError> {
        self.load(SourceKind::GoogleSearch, &query.sample.id)
    }
}

impl FactCheckProvider for FixtureProvider {
    fn lookup(&self, query: &Query<'_>, _claim: &str) -> Result<FactCheckResponse, ClientError> {
        self.load(SourceKind::FactCheck, &query.sample.id)
    }
}
