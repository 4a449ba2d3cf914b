//! Command-line interface.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use climcheck_core::evidence::bundle_success_rates;
use climcheck_core::metrics::fmt_fixed;
use climcheck_core::{PromptCatalog, Scheme, SourceKind, SourceSet, Strategy};

use crate::annotation::Annotator;
use crate::clock::{Clock, FixedClock, SystemClock};
use crate::config::{parse_setting, ExperimentSettings, LiveBackendSettings, RunConfig, SweepPlan};
use crate::error::{ConfigError, RunError};
use crate::inference::{Backend, LiveBackend, ScriptedBackend};
use crate::manifest::Manifest;
use crate::pool::for_each_bounded;
use crate::report::{self, RunReport};
use crate::retrieval::fixture::FixtureProvider;
use crate::retrieval::live::{GoogleFactCheck, ImageSearchEndpoint, SerperSearch};
use crate::retrieval::{
    EvidenceCache, FactCheckClient, GptPreviewClient, Retriever, ReverseImageClient, SourceClient, WebSearchClient,
};
use crate::retry::RetryPolicy;
use crate::runner::{self, Pipeline, RunRecord};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DEGRADED: u8 = 3;

/// Where model replies or evidence come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provider {
    Live,
    Scripted(PathBuf),
}

impl FromStr for Provider {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Provider::Live),
            _ => match s.strip_prefix("scripted:") {
                Some(dir) if !dir.is_empty() => Ok(Provider::Scripted(dir.into())),
                _ => Err(format!("expected `live` or `scripted:<dir>`, got `{s}`")),
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "climcheck",
    version,
    about = "Verify climate image-claim pairs with retrieval-augmented vision-language models"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON-lines manifest of samples.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Run configuration (TOML); a sweep plan for `sweep`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Evidence cache directory (overrides the config).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Model backend: `live` or `scripted:<dir>`.
    #[arg(long, global = true, default_value = "live")]
    pub backend: Provider,
    /// Evidence providers: `live` or `scripted:<dir>` with recorded payloads.
    #[arg(long, global = true, default_value = "live")]
    pub retrieval: Provider,
    /// Prompt catalog replacing the built-in one.
    #[arg(long, global = true)]
    pub prompts: Option<PathBuf>,
    /// Fetch evidence again instead of using cached results.
    #[arg(long, global = true)]
    pub refresh: bool,
    /// Log backend requests (images redacted) and responses.
    #[arg(long, global = true)]
    pub trace: bool,
    /// Maximum samples processed concurrently.
    #[arg(long, global = true)]
    pub concurrency: Option<usize>,
    /// Use this timestamp everywhere instead of the wall clock.
    #[arg(long, global = true, value_name = "RFC3339")]
    pub fixed_time: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RunSelection {
    /// Label scheme: 4class or 2class.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Reasoning strategy: cot or cod.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Evidence setting: internal, combination, a source key, or keys joined by `+`.
    #[arg(long)]
    pub setting: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prefetch evidence into the cache.
    Retrieve {
        /// Sources to fetch; defaults to the config's, or all of them.
        #[arg(long)]
        setting: Option<String>,
    },
    /// Label samples by majority vote over role prompts.
    Annotate {
        #[arg(long, default_value = "4class")]
        scheme: String,
    },
    /// Run one experiment and write its report.
    Verify(RunSelection),
    /// Run every combination in a sweep plan.
    Sweep,
    /// Rebuild the report of a recorded run.
    Evaluate {
        /// A run's record.jsonl.
        #[arg(long)]
        record: PathBuf,
    },
    /// Merge run reports into one summary grid.
    Report {
        /// report.json files or run directories.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

fn parse_value<T: serde::de::DeserializeOwned>(what: &str, value: &str) -> Result<T, ConfigError> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| ConfigError::Invalid(format!("unknown {what} `{value}`")))
}

/// Decides the process exit status for an error.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let config =
        err.chain().any(|e| e.is::<ConfigError>() || matches!(e.downcast_ref::<RunError>(), Some(RunError::Config(_))));
    if config {
        EXIT_CONFIG
    } else {
        EXIT_FAILURE
    }
}

impl Global {
    fn manifest(&self) -> anyhow::Result<Manifest> {
        let path = self.manifest.as_deref().ok_or_else(|| ConfigError::Invalid("--manifest is required".into()))?;
        Ok(Manifest::load(path)?)
    }

    fn clock(&self) -> Arc<dyn Clock> {
        match &self.fixed_time {
            Some(t) => Arc::new(FixedClock(t.clone())),
            None => Arc::new(SystemClock),
        }
    }

    fn catalog(&self) -> anyhow::Result<Arc<PromptCatalog>> {
        Ok(Arc::new(match &self.prompts {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.clone(), source })?;
                PromptCatalog::parse(&text)
                    .map_err(|e| ConfigError::Parse { path: path.clone(), message: e.to_string() })?
            }
            None => PromptCatalog::builtin(),
        }))
    }

    fn backend(&self, settings: &LiveBackendSettings) -> anyhow::Result<(Arc<dyn Backend>, RetryPolicy)> {
        Ok(match &self.backend {
            Provider::Live => (Arc::new(LiveBackend::from_env(settings.clone(), self.trace)?), RetryPolicy::default()),
            Provider::Scripted(dir) => (Arc::new(ScriptedBackend::load(dir)?), RetryPolicy::immediate()),
        })
    }

    fn apply(&self, config: &mut RunConfig) {
        if let Some(d) = &self.cache_dir {
            config.cache_dir = d.clone();
        }
        if let Some(d) = &self.out {
            config.output_dir = d.clone();
        }
        if let Some(n) = self.concurrency {
            config.concurrency_limit = n;
        }
    }

    fn pipeline(&self, config: &RunConfig, sources: &[SourceKind]) -> anyhow::Result<Pipeline> {
        let (backend, retry) = self.backend(&config.backend)?;
        let catalog = self.catalog()?;
        let clock = self.clock();
        let retrieval_retry = match self.retrieval {
            Provider::Live => RetryPolicy::default(),
            Provider::Scripted(_) => RetryPolicy::immediate(),
        };
        let mut retriever = Retriever::new(EvidenceCache::new(&config.cache_dir), clock.clone(), retrieval_retry)
            .with_refresh(self.refresh);
        for &source in sources {
            let client: Arc<dyn SourceClient> = match (source, &self.retrieval) {
                (SourceKind::GptSearch, _) => Arc::new(GptPreviewClient {
                    backend: backend.clone(),
                    catalog: catalog.clone(),
                    temperature: config.settings.temperature,
                }),
                (SourceKind::FactCheck, Provider::Scripted(d)) => Arc::new(FactCheckClient(FixtureProvider::new(d))),
                (SourceKind::ReverseImage, Provider::Scripted(d)) => {
                    Arc::new(ReverseImageClient(FixtureProvider::new(d)))
                }
                (SourceKind::GoogleSearch, Provider::Scripted(d)) => Arc::new(WebSearchClient(FixtureProvider::new(d))),
                (SourceKind::FactCheck, Provider::Live) => Arc::new(FactCheckClient(GoogleFactCheck::from_env()?)),
                (SourceKind::ReverseImage, Provider::Live) => {
                    Arc::new(ReverseImageClient(ImageSearchEndpoint::from_env()?))
                }
                (SourceKind::GoogleSearch, Provider::Live) => Arc::new(WebSearchClient(SerperSearch::from_env()?)),
            };
            retriever = retriever.with_client(client);
        }
        Ok(Pipeline { retriever, backend, catalog, retry, clock })
    }

    fn run_config(&self, selection: &RunSelection) -> anyhow::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => {
                let scheme = selection.scheme.as_deref().unwrap_or("4class");
                let strategy = selection.strategy.as_deref().unwrap_or("cot");
                RunConfig::new(ExperimentSettings::new(
                    parse_value::<Scheme>("scheme", scheme)?,
                    parse_value::<Strategy>("strategy", strategy)?,
                    SourceSet::internal(),
                ))
            }
        };
        if let Some(s) = &selection.scheme {
            config.settings.scheme = parse_value("scheme", s)?;
        }
        if let Some(s) = &selection.strategy {
            config.settings.strategy = parse_value("strategy", s)?;
        }
        if let Some(s) = &selection.setting {
            config.settings.sources = parse_setting(s)?;
        }
        self.apply(&mut config);
        config.validate()?;
        Ok(config)
    }
}

fn report_run(record: &RunRecord, dir: &Path) -> anyhow::Result<RunReport> {
    let report = RunReport::from_record(record)?;
    report::write_run_report(dir, &report)?;
    Ok(report)
}

/// Execute the parsed command; returns the exit status on success paths.
pub fn run(cli: Cli) -> anyhow::Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Retrieve { setting } => {
            let mut config = g.run_config(&RunSelection { scheme: None, strategy: None, setting: None })?;
            if let Some(s) = setting {
                config.settings.sources = parse_setting(s)?;
            } else if g.config.is_none() {
                config.settings.sources = SourceSet::all();
            }
            let manifest = g.manifest()?;
            let sources = config.settings.sources.by_priority();
            let pipeline = g.pipeline(&config, &sources)?;
            let mut bundles = Vec::with_capacity(manifest.len());
            let mut failure = None;
            for_each_bounded(
                &manifest.samples,
                config.concurrency_limit,
                |s| pipeline.retriever.gather(s, &manifest.image_path(s), &sources),
                |_, r| match r {
                    Ok(b) => {
                        bundles.push(b);
                        true
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        false
                    }
                },
            );
            if let Some(e) = failure {
                return Err(e.into());
            }
            if !sources.is_empty() {
                for (source, rate) in bundle_success_rates(&bundles)? {
                    println!("{:<14} {:>6}%", source.display_name(), fmt_fixed(100.0 * rate, 1));
                }
            }
            Ok(0)
        }
        Command::Annotate { scheme } => {
            let scheme: Scheme = parse_value("scheme", scheme)?;
            let mut config = match &g.config {
                Some(p) => RunConfig::load(p)?,
                None => {
                    RunConfig::new(ExperimentSettings::new(scheme, Strategy::ChainOfThought, SourceSet::internal()))
                }
            };
            g.apply(&mut config);
            let manifest = g.manifest()?;
            let (backend, retry) = g.backend(&config.backend)?;
            let catalog = g.catalog()?;
            let annotator = Annotator {
                backend: backend.as_ref(),
                catalog: &catalog,
                retry,
                temperature: config.settings.temperature,
                concurrency_limit: config.concurrency_limit,
            };
            let result = annotator.annotate(&manifest, scheme)?;
            let out = g.out.clone().unwrap_or_else(|| PathBuf::from("annotation"));
            result.write(&out)?;
            println!(
                "labeled {} of {} samples ({} undecided) -> {}",
                result.labeled.len(),
                manifest.len(),
                result.undecided.len(),
                out.display()
            );
            Ok(0)
        }
        Command::Verify(selection) => {
            let config = g.run_config(selection)?;
            let manifest = g.manifest()?;
            let pipeline = g.pipeline(&config, &config.settings.sources)?;
            let record = runner::run_experiment(&pipeline, &config, &manifest)?;
            let report = report_run(&record, &config.run_dir())?;
            print!("{}", report::summary_table(&[report]));
            Ok(if record.degraded() { EXIT_DEGRADED } else { 0 })
        }
        Command::Sweep => {
            let path =
                g.config.as_deref().ok_or_else(|| ConfigError::Invalid("sweep needs --config <plan.toml>".into()))?;
            let mut configs = SweepPlan::load(path)?.configs()?;
            for c in &mut configs {
                g.apply(c);
            }
            let first = configs.first().ok_or_else(|| ConfigError::Invalid("sweep has no runs".into()))?;
            let manifest = g.manifest()?;
            let mut sources: Vec<SourceKind> =
                configs.iter().flat_map(|c| c.settings.sources.iter().copied()).collect();
            sources.sort();
            sources.dedup();
            let pipeline = g.pipeline(first, &sources)?;
            let records = runner::sweep(&pipeline, &configs, &manifest)?;
            let reports = records
                .iter()
                .zip(&configs)
                .map(|(r, c)| report_run(r, &c.run_dir()))
                .collect::<anyhow::Result<Vec<_>>>()?;
            report::write_summary(&first.output_dir.join(report::SUMMARY_FILE), &reports)?;
            print!("{}", report::summary_table(&reports));
            Ok(if records.iter().any(RunRecord::degraded) { EXIT_DEGRADED } else { 0 })
        }
        Command::Evaluate { record } => {
            let rec = RunRecord::load(record)?;
            let dir = match &g.out {
                Some(d) => d.clone(),
                None => record.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            let report = report_run(&rec, &dir)?;
            print!("{}", report::summary_table(&[report]));
            Ok(0)
        }
        Command::Report { reports } => {
            let loaded = reports
                .iter()
                .map(|p| {
                    let path = if p.is_dir() { p.join(report::REPORT_FILE) } else { p.clone() };
                    RunReport::load(&path).with_context(|| format!("loading {}", path.display()))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            if let Some(out) = &g.out {
                report::write_summary(out, &loaded)?;
            }
            print!("{}", report::summary_table(&loaded));
            Ok(0)
        }
    }
}

/// Reject flag combinations that cannot work before doing anything.
pub fn check(cli: &Cli) -> anyhow::Result<()> {
    if let Some(0) = cli.global.concurrency {
        bail!(ConfigError::Invalid("--concurrency must be positive".into()));
    }
    Ok(())
}
