//! Shared harness for the integration tests: the twelve-sample mock
//! dataset, scripted pipelines and directory comparison.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use climcheck::clock::{Clock, FixedClock};
use climcheck::config::{RunConfig, SweepPlan};
use climcheck::inference::{Backend, BackendError, CompletionRequest, ScriptedBackend};
use climcheck::manifest::Manifest;
use climcheck::report::{self, RunReport};
use climcheck::retrieval::fixture::FixtureProvider;
use climcheck::retrieval::{
    EvidenceCache, FactCheckClient, GptPreviewClient, Retriever, ReverseImageClient, SourceClient, WebSearchClient,
};
use climcheck::retry::RetryPolicy;
use climcheck::runner::{self, Pipeline, RunRecord};
use climcheck_core::{ModelResponse, PromptCatalog};

pub const FIXED_TIME: &str = "2026-01-01T00:00:00.000Z";

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn mock_dir() -> PathBuf {
    crate_dir().join("tests/fixtures/mock12")
}

pub fn golden_dir() -> PathBuf {
    crate_dir().join("tests/fixtures/golden")
}

pub fn manifest() -> Manifest {
    Manifest::load(&mock_dir().join("manifest.jsonl")).unwrap()
}

pub fn scripted_backend() -> Arc<ScriptedBackend> {
    Arc::new(ScriptedBackend::load(&mock_dir().join("replies")).unwrap())
}

/// Retriever over the recorded provider payloads, mirroring the CLI's
/// `--retrieval scripted:<dir>` wiring.
pub fn retriever(cache_dir: &Path, backend: Arc<dyn Backend>, catalog: Arc<PromptCatalog>) -> Retriever {
    let clock: Arc<dyn Clock> = Arc::new(FixedClock(FIXED_TIME.into()));
    let fixtures = mock_dir().join("retrieval");
    let clients: [Arc<dyn SourceClient>; 4] = [
        Arc::new(FactCheckClient(FixtureProvider::new(&fixtures))),
        Arc::new(GptPreviewClient { backend, catalog, temperature: 0.0 }),
        Arc::new(ReverseImageClient(FixtureProvider::new(&fixtures))),
        Arc::new(WebSearchClient(FixtureProvider::new(&fixtures))),
    ];
    clients
        .into_iter()
        .fold(Retriever::new(EvidenceCache::new(cache_dir), clock, RetryPolicy::immediate()), |r, c| r.with_client(c))
}

pub fn pipeline_with(cache_dir: &Path, backend: Arc<dyn Backend>) -> Pipeline {
    let catalog = Arc::new(PromptCatalog::builtin());
    Pipeline {
        retriever: retriever(cache_dir, backend.clone(), catalog.clone()),
        backend,
        catalog,
        retry: RetryPolicy::immediate(),
        clock: Arc::new(FixedClock(FIXED_TIME.into())),
    }
}

pub fn pipeline(cache_dir: &Path) -> Pipeline {
    pipeline_with(cache_dir, scripted_backend())
}

/// The eight runs of the bundled mock sweep plan, redirected under `root`.
pub fn sweep_configs(root: &Path) -> Vec<RunConfig> {
    let mut configs = SweepPlan::load(&crate_dir().join("configs/mock_sweep.toml")).unwrap().configs().unwrap();
    for c in &mut configs {
        c.cache_dir = root.join("cache");
        c.output_dir = root.join("runs");
    }
    configs
}

/// Run the mock sweep under `root` and write every report, as the CLI does.
pub fn run_sweep(root: &Path) -> Vec<RunRecord> {
    let configs = sweep_configs(root);
    let records = runner::sweep(&pipeline(&root.join("cache")), &configs, &manifest()).unwrap();
    let reports: Vec<RunReport> = records
        .iter()
        .zip(&configs)
        .map(|(r, c)| {
            let rep = RunReport::from_record(r).unwrap();
            report::write_run_report(&c.run_dir(), &rep).unwrap();
            rep
        })
        .collect();
    report::write_summary(&root.join("runs").join(report::SUMMARY_FILE), &reports).unwrap();
    records
}

/// Every regular file below `dir`, keyed by relative path.
pub fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Names of files that differ between two trees (missing on either side
/// included).
pub fn tree_diff(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter().filter(|k| a.get(*k) != b.get(*k)).cloned().collect()
}

/// Wraps a backend, tracking total and peak in-flight calls. Each call
/// sleeps briefly so overlapping work is observable.
pub struct Instrumented {
    pub inner: Arc<dyn Backend>,
    pub delay: Duration,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

impl Instrumented {
    pub fn new(inner: Arc<dyn Backend>, delay: Duration) -> Self {
        Instrumented {
            inner,
            delay,
            calls: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

impl Backend for Instrumented {
    fn name(&self) -> &str {
        "instrumented"
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ModelResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        thread::sleep(self.delay);
        let result = self.inner.complete(request);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        result
    }
}
