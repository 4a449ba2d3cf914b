//! Experiment orchestration: one run per configuration, resumable.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use climcheck_core::{assemble, build_verdict_prompt, PromptCatalog, Sample};

use crate::clock::Clock;
use crate::config::RunConfig;
use crate::error::{ConfigError, RunError};
use crate::inference::{self, Backend};
use crate::manifest::Manifest;
use crate::pool::for_each_bounded;
use crate::retrieval::Retriever;
use crate::retry::RetryPolicy;

pub mod record;

pub use record::{PartialRecord, RecordHeader, RecordLine, RecordSummary, RunEntry, RunRecord};

pub const RECORD_FILE: &str = "record.jsonl";

/// Everything a run talks to.
pub struct Pipeline {
    pub retriever: Retriever,
    pub backend: Arc<dyn Backend>,
    pub catalog: Arc<PromptCatalog>,
    pub retry: RetryPolicy,
    pub clock: Arc<dyn Clock>,
}

impl Pipeline {
    /// Retrieval, assembly, prompting and inference for one sample.
    pub fn process(&self, config: &RunConfig, manifest: &Manifest, sample: &Sample) -> Result<RunEntry, RunError> {
        let settings = &config.settings;
        let plan = settings.assembly_plan();
        let image = manifest.image_path(sample);
        let bundle = self.retriever.gather(sample, &image, &plan.sources.by_priority())?;
        let context = assemble(&bundle, &plan);
        let prompt = build_verdict_prompt(&self.catalog, sample, &context, settings.strategy, settings.scheme);
        let completion = inference::complete(
            self.backend.as_ref(),
            &prompt,
            &manifest.base_dir,
            &sample.id,
            &settings.sources.setting_key(),
            settings.temperature,
            &self.retry,
        )?;
        let (prompt_tokens, completion_tokens, latency_s) = completion.usage();
        Ok(RunEntry {
            sample_id: sample.id.clone(),
            gold: sample.gold.and_then(|g| g.project(settings.scheme)),
            sources: bundle.success_flags(),
            included: context.sources(),
            est_tokens: context.est_tokens,
            outcome: completion.outcome(settings.scheme),
            prompt_tokens,
            completion_tokens,
            latency_s,
        })
    }
}

pub fn record_path(config: &RunConfig) -> PathBuf {
    config.run_dir().join(RECORD_FILE)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Load what an earlier attempt left behind and check it belongs to this
/// configuration and manifest.
fn resume_state(config: &RunConfig, manifest: &Manifest, path: &Path) -> Result<Option<PartialRecord>, RunError> {
    let Some(partial) = PartialRecord::read(path)? else { return Ok(None) };
    if partial.header.run_id != config.run_id() || partial.header.settings != config.settings {
        return Err(ConfigError::Invalid(format!(
            "{} was recorded with different settings; choose another run_id or output directory",
            path.display()
        ))
        .into());
    }
    let ids: HashSet<&str> = manifest.samples.iter().map(|s| s.id.as_str()).collect();
    if let Some(e) = partial.entries.iter().find(|e| !ids.contains(e.sample_id.as_str())) {
        return Err(RunError::Record {
            path: path.to_path_buf(),
            message: format!("sample `{}` is not in the manifest", e.sample_id),
        });
    }
    Ok(Some(partial))
}

/// Run one configuration over the manifest.
///
/// Entries are appended to `<output_dir>/<run_id>/record.jsonl` as samples
/// finish, so an interrupted run picks up where it stopped. The finished
/// record is rewritten atomically in manifest order. Re-running a finished
/// run returns the stored record without doing any work.
pub fn run_experiment(pipeline: &Pipeline, config: &RunConfig, manifest: &Manifest) -> Result<RunRecord, RunError> {
    config.validate()?;
    if manifest.is_empty() {
        return Err(ConfigError::Invalid("manifest has no samples".into()).into());
    }
    pipeline.retriever.ensure_clients(&config.settings.sources)?;
    let path = record_path(config);

    let previous = resume_state(config, manifest, &path)?;
    if let Some(PartialRecord { header, entries, summary: Some(summary) }) = &previous {
        if entries.len() == manifest.len() {
            tracing::info!(run_id = %header.run_id, "run already complete");
            return Ok(RunRecord { header: header.clone(), entries: entries.clone(), summary: summary.clone() });
        }
    }
    let (header, mut done) = match previous {
        Some(p) => (p.header, p.entries),
        None => (
            RecordHeader { run_id: config.run_id(), settings: config.settings.clone(), started: pipeline.clock.now() },
            Vec::new(),
        ),
    };

    // Rewrite what is kept, dropping any torn tail, then append from there.
    let mut prefix = record::encode_line(&RecordLine::Header(header.clone()));
    for e in &done {
        prefix.extend(record::encode_line(&RecordLine::Entry(e.clone())));
    }
    crate::fsutil::write_atomic(&path, &prefix).map_err(io_err(&path))?;
    let mut file: File = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;

    let recorded: HashSet<String> = done.iter().map(|e| e.sample_id.clone()).collect();
    let pending: Vec<&Sample> = manifest.samples.iter().filter(|s| !recorded.contains(&s.id)).collect();
    tracing::info!(run_id = %header.run_id, pending = pending.len(), recorded = done.len(), "starting run");

    let mut failure: Option<RunError> = None;
    for_each_bounded(
        &pending,
        config.concurrency_limit,
        |s| pipeline.process(config, manifest, s),
        |_, result| {
            let written = result.and_then(|entry| {
                let line = record::encode_line(&RecordLine::Entry(entry.clone()));
                file.write_all(&line).and_then(|_| file.flush()).map_err(io_err(&path))?;
                Ok(entry)
            });
            match written {
                Ok(entry) => {
                    done.push(entry);
                    true
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    false
                }
            }
        },
    );
    drop(file);
    if let Some(e) = failure {
        return Err(e);
    }

    let order: HashMap<&str, usize> = manifest.samples.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    done.sort_by_key(|e| order[e.sample_id.as_str()]);
    let backend_failures = done.iter().filter(|e| e.is_backend_failure()).count();
    let degraded = backend_failures * 2 > done.len();
    if degraded {
        tracing::warn!(run_id = %header.run_id, backend_failures, "run degraded: most backend calls failed");
    }
    let record = RunRecord {
        header,
        summary: RecordSummary { finished: pipeline.clock.now(), samples: done.len(), backend_failures, degraded },
        entries: done,
    };
    record.write(&path)?;
    Ok(record)
}

/// Run several configurations in order against one pipeline (and so one
/// evidence cache).
pub fn sweep(pipeline: &Pipeline, configs: &[RunConfig], manifest: &Manifest) -> Result<Vec<RunRecord>, RunError> {
    if configs.is_empty() {
        return Err(ConfigError::Invalid("sweep has no runs".into()).into());
    }
    let mut ids = HashSet::new();
    for c in configs {
        c.validate()?;
        if !ids.insert(c.run_dir()) {
            return Err(ConfigError::Invalid(format!("duplicate run_id `{}`", c.run_id())).into());
        }
        if c.cache_dir != configs[0].cache_dir {
            return Err(ConfigError::Invalid("sweep runs must share one cache_dir".into()).into());
        }
    }
    configs.iter().map(|c| run_experiment(pipeline, c, manifest)).collect()
}
