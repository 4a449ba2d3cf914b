//! Run configuration and sweep plans (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use climcheck_core::settings::{DEFAULT_TOKEN_BUDGET, MIN_TOKEN_BUDGET};
use climcheck_core::{AssemblyMode, AssemblyPlan, Scheme, SourceKind, SourceSet, Strategy};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// The parts of a run that determine its results. Snapshotted into every
/// run record; a resumed run must match it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub scheme: Scheme,
    pub strategy: Strategy,
    #[serde(default)]
    pub sources: SourceSet,
    #[serde(default)]
    pub assembly_mode: AssemblyMode,
    #[serde(default = "default_budget")]
    pub token_budget: usize,
    /// Decoding temperature passed to live backends.
    #[serde(default)]
    pub temperature: f64,
}

fn default_budget() -> usize {
    DEFAULT_TOKEN_BUDGET
}

impl ExperimentSettings {
    pub fn new(scheme: Scheme, strategy: Strategy, sources: SourceSet) -> Self {
        ExperimentSettings {
            scheme,
            strategy,
            sources,
            assembly_mode: AssemblyMode::default(),
            token_budget: DEFAULT_TOKEN_BUDGET,
            temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.token_budget < MIN_TOKEN_BUDGET {
            return Err(ConfigError::Invalid(format!(
                "token_budget {} is below the minimum of {MIN_TOKEN_BUDGET}",
                self.token_budget
            )));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ConfigError::Invalid(format!("temperature {} is out of range", self.temperature)));
        }
        Ok(())
    }

    pub fn assembly_plan(&self) -> AssemblyPlan {
        AssemblyPlan { sources: self.sources.clone(), mode: self.assembly_mode, token_budget: self.token_budget }
    }

    /// `<scheme>-<strategy>-<setting>`, e.g. `4class-cod-combination`.
    pub fn default_run_id(&self) -> String {
        format!("{}-{}-{}", self.scheme.tag(), self.strategy.tag(), self.sources.setting_key())
    }
}

/// Connection settings for the HTTP chat backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiveBackendSettings {
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
}

fn default_endpoint() -> String {
    "https://api.openai.com/v1/chat/completions".into()
}

fn default_model() -> String {
    "gpt-4o".into()
}

fn default_timeout() -> u64 {
    120
}

impl Default for LiveBackendSettings {
    fn default() -> Self {
        LiveBackendSettings { endpoint: default_endpoint(), model: default_model(), timeout_s: default_timeout() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub run_id: Option<String>,
    #[serde(flatten)]
    pub settings: ExperimentSettings,
    #[serde(default = "default_concurrency")]
    pub concurrency_limit: usize,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub backend: LiveBackendSettings,
}

fn default_concurrency() -> usize {
    4
}

fn default_cache_dir() -> PathBuf {
    "cache".into()
}

fn default_output_dir() -> PathBuf {
    "runs".into()
}

impl RunConfig {
    pub fn new(settings: ExperimentSettings) -> Self {
        RunConfig {
            run_id: None,
            settings,
            concurrency_limit: default_concurrency(),
            cache_dir: default_cache_dir(),
            output_dir: default_output_dir(),
            backend: LiveBackendSettings::default(),
        }
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        RunConfig::from_toml(&read(path)?, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.settings.validate()?;
        if self.concurrency_limit == 0 {
            return Err(ConfigError::Invalid("concurrency_limit must be positive".into()));
        }
        if let Some(id) = &self.run_id {
            if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
                return Err(ConfigError::Invalid(format!("run_id `{id}` is not a valid directory name")));
            }
        }
        Ok(())
    }

    pub fn run_id(&self) -> String {
        self.run_id.clone().unwrap_or_else(|| self.settings.default_run_id())
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(self.run_id())
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })
}

/// Parse an evidence setting name: `internal`, `combination` (or `all`),
/// a single source key, or keys joined with `+`.
pub fn parse_setting(name: &str) -> Result<SourceSet, ConfigError> {
    let name = name.trim();
    match name {
        "internal" => return Ok(SourceSet::internal()),
        "combination" | "all" => return Ok(SourceSet::all()),
        _ => {}
    }
    let kinds = name
        .split('+')
        .map(|k| {
            SourceKind::from_key(k.trim()).ok_or_else(|| ConfigError::Invalid(format!("unknown source `{}`", k.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SourceSet::new(kinds)?)
}

/// Shared defaults for every run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBase {
    #[serde(default)]
    pub assembly_mode: AssemblyMode,
    #[serde(default = "default_budget")]
    pub token_budget: usize,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_concurrency")]
    pub concurrency_limit: usize,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub backend: LiveBackendSettings,
}

impl Default for SweepBase {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

/// A cross-product of schemes × strategies × evidence settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub schemes: Vec<Scheme>,
    pub strategies: Vec<Strategy>,
    /// Evidence settings, see [`parse_setting`].
    pub settings: Vec<String>,
    #[serde(default)]
    pub base: SweepBase,
}

impl SweepPlan {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(&read(path)?)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    /// Expand into run configurations, schemes outermost and settings
    /// innermost.
    pub fn configs(&self) -> Result<Vec<RunConfig>, ConfigError> {
        let settings = self.settings.iter().map(|s| parse_setting(s)).collect::<Result<Vec<_>, _>>()?;
        let mut out = Vec::new();
        for &scheme in &self.schemes {
            for &strategy in &self.strategies {
                for sources in &settings {
                    let b = &self.base;
                    let config = RunConfig {
                        run_id: None,
                        settings: ExperimentSettings {
                            scheme,
                            strategy,
                            sources: sources.clone(),
                            assembly_mode: b.assembly_mode,
                            token_budget: b.token_budget,
                            temperature: b.temperature,
                        },
                        concurrency_limit: b.concurrency_limit,
                        cache_dir: b.cache_dir.clone(),
                        output_dir: b.output_dir.clone(),
                        backend: b.backend.clone(),
                    };
                    config.validate()?;
                    out.push(config);
                }
            }
        }
        Ok(out)
    }
}
