mod common;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use climcheck::clock::FixedClock;
use climcheck::retrieval::{ClientError, Evidence, EvidenceCache, Query, Retriever, SourceClient};
use climcheck::retry::RetryPolicy;
use climcheck_core::{EvidenceItem, MatchKind, PromptCatalog, Sample, SourceKind};
use common::*;

fn sample(id: &str) -> Sample {
    manifest().samples.into_iter().find(|s| s.id == id).unwrap()
}

fn fetch(r: &Retriever, id: &str, source: SourceKind) -> climcheck_core::SourceResult {
    let m = manifest();
    let s = sample(id);
    r.fetch(&s, &m.image_path(&s), source).unwrap()
}

fn fixture_retriever(cache: &Path) -> Retriever {
    retriever(cache, scripted_backend(), Arc::new(PromptCatalog::builtin()))
}

#[test]
fn reverse_image_hits_put_exact_matches_first() {
    let dir = tempfile::tempdir().unwrap();
    let r = fetch(&fixture_retriever(dir.path()), "m02", SourceKind::ReverseImage);
    assert!(r.success);
    let kinds: Vec<MatchKind> = r.items.iter().map(|i| i.match_kind.unwrap()).collect();
    use MatchKind::*;
    assert_eq!(kinds, [Exact, Exact, Visual, Visual, Visual]);
    assert!(r.about_image.is_some());
}

#[test]
fn web_search_is_capped_at_ten_items() {
    let dir = tempfile::tempdir().unwrap();
    let r = fetch(&fixture_retriever(dir.path()), "m03", SourceKind::GoogleSearch);
    assert_eq!(r.items.len(), 10);
    assert!(r.items.iter().all(|i| i.url.starts_with("https://")));
}

#[test]
fn fact_checks_carry_verdict_hints() {
    let dir = tempfile::tempdir().unwrap();
    let r = fetch(&fixture_retriever(dir.path()), "m02", SourceKind::FactCheck);
    assert_eq!(r.items.len(), 2);
    assert!(r.items.iter().all(|i| i.verdict_hint.is_some()));
}

#[test]
fn provider_errors_and_empty_answers_are_unsuccessful() {
    let dir = tempfile::tempdir().unwrap();
    let r = fixture_retriever(dir.path());
    let quota = fetch(&r, "m06", SourceKind::FactCheck);
    assert!(!quota.success);
    assert!(quota.error.as_deref().unwrap().contains("quota exceeded"));
    // No fact check on file: a clean miss with no error.
    let miss = fetch(&r, "m04", SourceKind::FactCheck);
    assert!(!miss.success && miss.error.is_none());
    let empty = fetch(&r, "m05", SourceKind::ReverseImage);
    assert!(!empty.success && empty.error.is_none());
    let no_link = fetch(&r, "m12", SourceKind::GptSearch);
    assert!(!no_link.success && no_link.error.is_some());
}

/// A client that never gets through.
struct AlwaysTimesOut(AtomicUsize);

impl SourceClient for AlwaysTimesOut {
    fn source(&self) -> SourceKind {
        SourceKind::GoogleSearch
    }

    fn lookup(&self, _: &Query<'_>) -> Result<Evidence, ClientError> {
        self.0.fetch_add(1, Ordering::SeqCst);
        Err(ClientError::Transport("timed out".into()))
    }
}

/// A client that always answers with one item.
struct Counting(SourceKind, AtomicUsize);

impl SourceClient for Counting {
    fn source(&self) -> SourceKind {
        self.0
    }

    fn lookup(&self, q: &Query<'_>) -> Result<Evidence, ClientError> {
        let n = self.1.fetch_add(1, Ordering::SeqCst);
        Ok(Evidence {
            items: vec![EvidenceItem::new(format!("hit {n}"), q.sample.claim.clone(), "https://example.org/")],
            about_image: None,
        })
    }
}

fn bare_retriever(cache: &Path) -> Retriever {
    Retriever::new(EvidenceCache::new(cache), Arc::new(FixedClock(FIXED_TIME.into())), RetryPolicy::immediate())
}

#[test]
fn transport_failures_are_retried_then_cached_as_failures() {
    let dir = tempfile::tempdir().unwrap();
    let client = Arc::new(AlwaysTimesOut(AtomicUsize::new(0)));
    let r = bare_retriever(dir.path()).with_client(client.clone());
    let result = fetch(&r, "m01", SourceKind::GoogleSearch);
    assert_eq!(client.0.load(Ordering::SeqCst), 3);
    assert_eq!(r.lookups(), 3);
    assert!(!result.success);
    assert_eq!(result.error.as_deref(), Some("transport failure after 3 attempts: timed out"));
    let cached = EvidenceCache::new(dir.path()).get("m01", SourceKind::GoogleSearch).unwrap();
    assert_eq!(cached.as_ref(), Some(&result));

    // The failure is replayed, not retried.
    let again = fetch(&r, "m01", SourceKind::GoogleSearch);
    assert_eq!(again, result);
    assert_eq!(client.0.load(Ordering::SeqCst), 3);
}

#[test]
fn fixture_timeouts_use_the_full_attempt_budget() {
    let dir = tempfile::tempdir().unwrap();
    let r = fixture_retriever(dir.path());
    let result = fetch(&r, "m08", SourceKind::ReverseImage);
    assert_eq!(r.lookups(), 3);
    assert!(result.error.as_deref().unwrap().starts_with("transport failure after 3 attempts"));
}

#[test]
fn warm_cache_makes_no_lookups() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest();
    let cold = fixture_retriever(dir.path());
    let bundles: Vec<_> =
        m.samples.iter().map(|s| cold.gather(s, &m.image_path(s), &SourceKind::ALL).unwrap()).collect();
    assert!(cold.lookups() >= 48);

    let warm = fixture_retriever(dir.path());
    for (s, b) in m.samples.iter().zip(&bundles) {
        assert_eq!(&warm.gather(s, &m.image_path(s), &SourceKind::ALL).unwrap(), b);
    }
    assert_eq!(warm.lookups(), 0);
}

#[test]
fn refresh_refetches_once_per_process() {
    let dir = tempfile::tempdir().unwrap();
    let client = Arc::new(Counting(SourceKind::FactCheck, AtomicUsize::new(0)));
    let seed = bare_retriever(dir.path()).with_client(client.clone());
    let first = fetch(&seed, "m01", SourceKind::FactCheck);
    assert_eq!(first.items[0].title, "hit 0");

    let r = bare_retriever(dir.path()).with_client(client.clone()).with_refresh(true);
    let refreshed = fetch(&r, "m01", SourceKind::FactCheck);
    assert_eq!(refreshed.items[0].title, "hit 1");
    // Within the same process the refreshed entry is reused.
    assert_eq!(fetch(&r, "m01", SourceKind::FactCheck), refreshed);
    assert_eq!(client.1.load(Ordering::SeqCst), 2);
    fetch(&r, "m02", SourceKind::FactCheck);
    assert_eq!(client.1.load(Ordering::SeqCst), 3);
}

#[test]
fn missing_clients_are_reported_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let r = bare_retriever(dir.path()).with_client(Arc::new(Counting(SourceKind::FactCheck, AtomicUsize::new(0))));
    assert!(r.ensure_clients(&[SourceKind::FactCheck]).is_ok());
    let err = r.ensure_clients(&SourceKind::ALL).unwrap_err();
    assert!(err.to_string().contains("gptsearch"), "{err}");
}

#[test]
fn every_fixture_result_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest();
    let r = fixture_retriever(dir.path());
    let mut successes = [0usize; 4];
    for s in &m.samples {
        let bundle = r.gather(s, &m.image_path(s), &SourceKind::ALL).unwrap();
        for (i, source) in SourceKind::ALL.iter().enumerate() {
            let res = &bundle.results[source];
            assert!(res.is_consistent(), "{} {:?}: {res:?}", s.id, source);
            assert!(res.items.len() <= 10);
            successes[i] += res.success as usize;
        }
    }
    // Fact check 7, GPT search 11, reverse image 10, web search 10.
    assert_eq!(successes, [7, 11, 10, 10]);
}

#[test]
fn unreadable_images_fail_the_reverse_lookup() {
    let dir = tempfile::tempdir().unwrap();
    let r = fixture_retriever(dir.path());
    let s = sample("m01");
    let result = r.fetch(&s, &dir.path().join("missing.png"), SourceKind::ReverseImage).unwrap();
    assert!(!result.success);
    assert!(result.error.as_deref().unwrap().contains("unreadable"));
}
