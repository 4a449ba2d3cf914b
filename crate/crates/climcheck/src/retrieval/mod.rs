//! Evidence retrieval: per-source clients behind a cache-first retriever.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use climcheck_core::{EvidenceBundle, EvidenceItem, Sample, SourceKind, SourceResult};
use thiserror::Error;

use crate::clock::Clock;
use crate::error::{ConfigError, RunError};
use crate::retry::RetryPolicy;

pub mod cache;
pub mod fixture;
pub mod live;
pub mod sources;

pub use cache::EvidenceCache;
pub use sources::{FactCheckClient, GptPreviewClient, ReverseImageClient, WebSearchClient};

/// What a client is asked about.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub sample: &'a Sample,
    pub image_path: &'a Path,
}

/// Normalized payload of a successful lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    pub items: Vec<EvidenceItem>,
    pub about_image: Option<String>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClientError {
    /// Timeouts and connection failures; retried.
    #[error("transport failure: {0}")]
    Transport(String),
    /// The provider answered with an error, or the input was unusable.
    #[error("{0}")]
    Provider(String),
}

impl ClientError {
    pub fn is_transport(&self) -> bool {
        matches!(self, ClientError::Transport(_))
    }
}

pub trait SourceClient: Send + Sync {
    fn source(&self) -> SourceKind;
    fn lookup(&self, query: &Query<'_>) -> Result<Evidence, ClientError>;
}

/// Cache-first access to the configured clients.
///
/// Every lookup result, failures included, is written to the cache so that
/// later runs replay it exactly. With `refresh` set, each (sample, source)
/// pair is fetched again once per process and cached results are used
/// after that.
pub struct Retriever {
    clients: BTreeMap<SourceKind, Arc<dyn SourceClient>>,
    cache: EvidenceCache,
    retry: RetryPolicy,
    clock: Arc<dyn Clock>,
    refresh: bool,
    refreshed: Mutex<HashSet<(String, SourceKind)>>,
    lookups: AtomicUsize,
}

impl Retriever {
    pub fn new(cache: EvidenceCache, clock: Arc<dyn Clock>, retry: RetryPolicy) -> Self {
        Retriever {
            clients: BTreeMap::new(),
            cache,
            retry,
            clock,
            refresh: false,
            refreshed: Mutex::new(HashSet::new()),
            lookups: AtomicUsize::new(0),
        }
    }

    pub fn with_client(mut self, client: Arc<dyn SourceClient>) -> Self {
        self.clients.insert(client.source(), client);
        self
    }

    pub fn with_refresh(mut self, refresh: bool) -> Self {
        self.refresh = refresh;
        self
    }

    pub fn cache(&self) -> &EvidenceCache {
        &self.cache
    }

    /// Client lookups made so far, retries included.
    pub fn lookups(&self) -> usize {
        self.lookups.load(Ordering::SeqCst)
    }

    pub fn ensure_clients(&self, sources: &[SourceKind]) -> Result<(), ConfigError> {
        match sources.iter().find(|s| !self.clients.contains_key(s)) {
            Some(s) => Err(ConfigError::Invalid(format!("no client configured for source `{}`", s.key()))),
            None => Ok(()),
        }
    }

    fn wants_refresh(&self, sample_id: &str, source: SourceKind) -> bool {
        self.refresh && self.refreshed.lock().expect("refresh set poisoned").insert((sample_id.to_string(), source))
    }

    pub fn fetch(&self, sample: &Sample, image_path: &Path, source: SourceKind) -> Result<SourceResult, RunError> {
        if !self.wants_refresh(&sample.id, source) {
            if let Some(hit) = self.cache.get(&sample.id, source)? {
                return Ok(hit);
            }
        }
        let client = self
            .clients
            .get(&source)
            .ok_or_else(|| ConfigError::Invalid(format!("no client configured for source `{}`", source.key())))?;
        let query = Query { sample, image_path };
        let (result, attempts) = self.retry.run(
            |_| {
                self.lookups.fetch_add(1, Ordering::SeqCst);
                client.lookup(&query)
            },
            ClientError::is_transport,
        );
        let fetched_at = self.clock.now();
        let result = match result {
            Ok(ev) => SourceResult::completed(source, ev.items, ev.about_image, fetched_at),
            Err(ClientError::Transport(m)) => {
                tracing::warn!(sample = %sample.id, source = source.key(), attempts, "lookup failed: {m}");
                SourceResult::failed(source, format!("transport failure after {attempts} attempts: {m}"), fetched_at)
            }
            Err(ClientError::Provider(m)) => {
                tracing::info!(sample = %sample.id, source = source.key(), "lookup unsuccessful: {m}");
                SourceResult::failed(source, m, fetched_at)
            }
        };
        self.cache.put(&sample.id, &result)?;
        Ok(result)
    }

    /// Fetch every source in `sources` for one sample.
    pub fn gather(
        &self,
        sample: &Sample,
        image_path: &Path,
        sources: &[SourceKind],
    ) -> Result<EvidenceBundle, RunError> {
        let mut bundle = EvidenceBundle::new(sample.id.clone());
        for &source in sources {
            bundle.insert(self.fetch(sample, image_path, source)?);
        }
        Ok(bundle)
    }
}
