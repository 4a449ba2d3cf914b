mod common;

use std::fs;
use std::sync::Arc;
use std::time::Duration;

use climcheck::config::{ExperimentSettings, RunConfig};
use climcheck::error::{ConfigError, RunError};
use climcheck::inference::ScriptedBackend;
use climcheck::runner::{self, record_path, RunRecord};
use climcheck_core::{FallbackReason, Outcome, Scheme, SourceSet, Strategy};
use common::*;

fn config(root: &std::path::Path, sources: SourceSet) -> RunConfig {
    let mut c = RunConfig::new(ExperimentSettings::new(Scheme::FourClass, Strategy::ChainOfThought, sources));
    c.cache_dir = root.join("cache");
    c.output_dir = root.join("runs");
    c
}

#[test]
fn sweep_reproduces_golden_runs() {
    let dir = tempfile::tempdir().unwrap();
    run_sweep(dir.path());
    let got = read_tree(&dir.path().join("runs"));
    let want = read_tree(&golden_dir().join("runs"));
    assert_eq!(got.len(), 8 * 4 + 1);
    assert_eq!(tree_diff(&got, &want), Vec::<String>::new());
}

#[test]
fn golden_records_load_and_summarize() {
    let record = RunRecord::load(&golden_dir().join("runs/4class-cot-internal/record.jsonl")).unwrap();
    assert_eq!(record.entries.len(), 12);
    assert!(!record.degraded());
    // Refusal on m04, which the runner keeps as a fallback.
    let m04 = &record.entries[3];
    assert!(matches!(&m04.outcome, Outcome::Fallback(f) if f.reason == FallbackReason::ExplicitRefusal));
}

#[test]
fn internal_runs_carry_no_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), SourceSet::internal());
    let p = pipeline(dir.path().join("cache").as_path());
    let record = runner::run_experiment(&p, &c, &manifest()).unwrap();
    for e in &record.entries {
        assert_eq!(e.est_tokens, 0);
        assert!(e.included.is_empty() && e.sources.is_empty());
    }
    assert_eq!(p.retriever.lookups(), 0);
    assert!(!dir.path().join("cache").exists());
}

#[test]
fn resume_after_interruption_matches_an_uninterrupted_run() {
    let m = manifest();
    for (sources, k) in [(SourceSet::internal(), 5), (SourceSet::all(), 7), (SourceSet::all(), 0)] {
        let reference = tempfile::tempdir().unwrap();
        let c = config(reference.path(), sources.clone());
        runner::run_experiment(&pipeline(&reference.path().join("cache")), &c, &m).unwrap();
        let full = fs::read(record_path(&c)).unwrap();

        // Simulate a crash after k entries, mid-way through writing the next.
        let resumed = tempfile::tempdir().unwrap();
        let c2 = config(resumed.path(), sources.clone());
        let text = String::from_utf8(full.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let mut partial: String = lines[..=k].iter().map(|l| format!("{l}\n")).collect();
        partial.push_str(&lines[k + 1][..20]);
        fs::create_dir_all(c2.run_dir()).unwrap();
        fs::write(record_path(&c2), partial).unwrap();

        let backend = Arc::new(ScriptedBackend::load(&mock_dir().join("replies")).unwrap());
        let p = pipeline_with(&resumed.path().join("cache"), backend.clone());
        runner::run_experiment(&p, &c2, &m).unwrap();
        assert_eq!(fs::read(record_path(&c2)).unwrap(), full, "{} after {k}", sources.setting_key());

        // Only the unfinished samples reached the backend: one verdict call
        // each, plus one preview lookup when evidence is gathered.
        let per_sample = if sources.is_empty() { 1 } else { 2 };
        assert_eq!(backend.calls(), (12 - k) * per_sample);
    }
}

#[test]
fn finished_runs_are_not_repeated() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), SourceSet::all());
    let m = manifest();
    let first = runner::run_experiment(&pipeline(&dir.path().join("cache")), &c, &m).unwrap();
    let before = fs::read(record_path(&c)).unwrap();

    let backend = Arc::new(ScriptedBackend::default());
    let p = pipeline_with(&dir.path().join("cache"), backend.clone());
    let again = runner::run_experiment(&p, &c, &m).unwrap();
    assert_eq!(backend.calls(), 0);
    assert_eq!(p.retriever.lookups(), 0);
    assert_eq!(again, first);
    assert_eq!(fs::read(record_path(&c)).unwrap(), before);
}

#[test]
fn warm_cache_serves_a_second_setting() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest();
    let cache = dir.path().join("cache");
    let p = pipeline(&cache);
    runner::run_experiment(&p, &config(dir.path(), SourceSet::all()), &m).unwrap();
    let cold = p.retriever.lookups();
    assert!(cold >= 48);

    let mut c = config(dir.path(), SourceSet::all());
    c.settings.strategy = Strategy::ChainOfDraft;
    let p2 = pipeline(&cache);
    runner::run_experiment(&p2, &c, &m).unwrap();
    assert_eq!(p2.retriever.lookups(), 0);
}

#[test]
fn concurrency_limit_bounds_in_flight_calls() {
    for limit in [1, 3] {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(dir.path(), SourceSet::internal());
        c.concurrency_limit = limit;
        let backend = Arc::new(Instrumented::new(scripted_backend(), Duration::from_millis(15)));
        let p = pipeline_with(&dir.path().join("cache"), backend.clone());
        let record = runner::run_experiment(&p, &c, &manifest()).unwrap();
        assert_eq!(backend.calls(), 12);
        assert!(backend.peak() <= limit, "peak {} over limit {limit}", backend.peak());
        if limit > 1 {
            assert!(backend.peak() > 1, "samples never overlapped");
        }
        // Completion order does not leak into the record.
        let ids: Vec<&str> = record.entries.iter().map(|e| e.sample_id.as_str()).collect();
        let want: Vec<String> = (1..=12).map(|i| format!("m{i:02}")).collect();
        assert_eq!(ids, want);
    }
}

#[test]
fn concurrent_and_serial_runs_agree() {
    let m = manifest();
    let mut outputs = Vec::new();
    for limit in [1, 6] {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(dir.path(), SourceSet::all());
        c.concurrency_limit = limit;
        runner::run_experiment(&pipeline(&dir.path().join("cache")), &c, &m).unwrap();
        outputs.push(fs::read(record_path(&c)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn mostly_failing_backends_mark_the_run_degraded() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), SourceSet::internal());
    let p = pipeline_with(&dir.path().join("cache"), Arc::new(ScriptedBackend::default()));
    let record = runner::run_experiment(&p, &c, &manifest()).unwrap();
    assert!(record.degraded());
    assert_eq!(record.summary.backend_failures, 12);
    assert!(record.entries.iter().all(|e| e.is_backend_failure() && e.prompt_tokens == 0));
}

#[test]
fn resuming_with_other_settings_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest();
    let c = config(dir.path(), SourceSet::internal());
    runner::run_experiment(&pipeline(&dir.path().join("cache")), &c, &m).unwrap();
    let mut changed = c.clone();
    changed.settings.token_budget = 5000;
    let err = runner::run_experiment(&pipeline(&dir.path().join("cache")), &changed, &m).unwrap_err();
    assert!(matches!(err, RunError::Config(ConfigError::Invalid(_))), "{err}");
}

#[test]
fn records_naming_unknown_samples_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manifest();
    let c = config(dir.path(), SourceSet::internal());
    runner::run_experiment(&pipeline(&dir.path().join("cache")), &c, &m).unwrap();
    // Drop a sample from the manifest; the record now mentions a stranger.
    m.samples.pop();
    let text = fs::read_to_string(record_path(&c)).unwrap();
    let truncated: String = text.lines().take(13).map(|l| format!("{l}\n")).collect();
    fs::write(record_path(&c), truncated).unwrap();
    m.samples.remove(0);
    let err = runner::run_experiment(&pipeline(&dir.path().join("cache")), &c, &m).unwrap_err();
    assert!(matches!(err, RunError::Record { .. }), "{err}");
}

#[test]
fn sweeps_reject_empty_and_duplicate_plans() {
    let dir = tempfile::tempdir().unwrap();
    let p = pipeline(&dir.path().join("cache"));
    let m = manifest();
    assert!(matches!(runner::sweep(&p, &[], &m), Err(RunError::Config(_))));
    let c = config(dir.path(), SourceSet::internal());
    assert!(matches!(runner::sweep(&p, &[c.clone(), c.clone()], &m), Err(RunError::Config(_))));
    let mut other_cache = c.clone();
    other_cache.run_id = Some("elsewhere".into());
    other_cache.cache_dir = dir.path().join("cache2");
    assert!(matches!(runner::sweep(&p, &[c, other_cache], &m), Err(RunError::Config(_))));
    assert!(!dir.path().join("runs").exists());
}

#[test]
fn empty_manifests_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manifest();
    m.samples.clear();
    let err = runner::run_experiment(&pipeline(&dir.path().join("cache")), &config(dir.path(), SourceSet::all()), &m)
        .unwrap_err();
    assert!(matches!(err, RunError::Config(_)));
}
