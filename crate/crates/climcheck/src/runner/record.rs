//! Run records: JSON lines with a header, one entry per sample and a
//! closing summary.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use climcheck_core::{EvaluatedSample, FallbackReason, Label, Outcome, SourceKind};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentSettings;
use crate::error::RunError;
use crate::fsutil;

/// Result of one sample in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub sample_id: String,
    /// Reference label projected onto the run's scheme.
    pub gold: Option<Label>,
    /// Whether each configured source returned usable evidence.
    pub sources: BTreeMap<SourceKind, bool>,
    /// Sources whose block made it into the prompt, in prompt order.
    pub included: Vec<SourceKind>,
    pub est_tokens: usize,
    pub outcome: Outcome,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_s: f64,
}

impl RunEntry {
    pub fn is_backend_failure(&self) -> bool {
        matches!(&self.outcome, Outcome::Fallback(f) if f.reason == FallbackReason::BackendFailure)
    }

    pub fn evaluated(&self) -> EvaluatedSample<'_> {
        EvaluatedSample {
            gold: self.gold,
            outcome: &self.outcome,
            prompt_tokens: self.prompt_tokens,
            completion_tokens: self.completion_tokens,
            latency_s: self.latency_s,
            sources: &self.sources,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub run_id: String,
    pub settings: ExperimentSettings,
    pub started: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub finished: String,
    pub samples: usize,
    pub backend_failures: usize,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RecordLine {
    Header(RecordHeader),
    Entry(RunEntry),
    Summary(RecordSummary),
}

pub fn encode_line(line: &RecordLine) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(line).expect("record lines serialize");
    bytes.push(b'\n');
    bytes
}

/// A complete run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub header: RecordHeader,
    /// In manifest order.
    pub entries: Vec<RunEntry>,
    pub summary: RecordSummary,
}

impl RunRecord {
    pub fn run_id(&self) -> &str {
        &self.header.run_id
    }

    pub fn settings(&self) -> &ExperimentSettings {
        &self.header.settings
    }

    pub fn degraded(&self) -> bool {
        self.summary.degraded
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = encode_line(&RecordLine::Header(self.header.clone()));
        for e in &self.entries {
            out.extend(encode_line(&RecordLine::Entry(e.clone())));
        }
        out.extend(encode_line(&RecordLine::Summary(self.summary.clone())));
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        fsutil::write_atomic(path, &self.to_bytes()).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
    }

    /// Load a finished record.
    pub fn load(path: &Path) -> Result<RunRecord, RunError> {
        let partial = PartialRecord::read(path)?
            .ok_or_else(|| RunError::Record { path: path.to_path_buf(), message: "no such record".into() })?;
        let summary = partial.summary.ok_or_else(|| RunError::Record {
            path: path.to_path_buf(),
            message: "run is unfinished; resume it first".into(),
        })?;
        Ok(RunRecord { header: partial.header, entries: partial.entries, summary })
    }
}

/// Whatever a possibly interrupted run left on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialRecord {
    pub header: RecordHeader,
    pub entries: Vec<RunEntry>,
    pub summary: Option<RecordSummary>,
}

impl PartialRecord {
    /// `Ok(None)` when the file does not exist. A final line that does not
    /// parse is treated as an interrupted write and dropped; a bad line
    /// anywhere else is an error.
    pub fn read(path: &Path) -> Result<Option<PartialRecord>, RunError> {
        let bad = |message: String| RunError::Record { path: path.to_path_buf(), message };
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(RunError::Io { path: path.to_path_buf(), source }),
        };
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let mut parsed = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            match serde_json::from_str::<RecordLine>(line) {
                Ok(l) => parsed.push(l),
                Err(_) if i + 1 == lines.len() => {
                    tracing::warn!(path = %path.display(), "dropping truncated last record line");
                }
                Err(e) => return Err(bad(format!("line {}: {e}", i + 1))),
            }
        }
        let mut it = parsed.into_iter();
        let header = match it.next() {
            Some(RecordLine::Header(h)) => h,
            None => return Ok(None),
            Some(_) => return Err(bad("first line is not a header".into())),
        };
        let mut entries = Vec::new();
        let mut summary = None;
        let mut seen = HashSet::new();
        for line in it {
            match line {
                _ if summary.is_some() => return Err(bad("lines after the summary".into())),
                RecordLine::Entry(e) => {
                    if !seen.insert(e.sample_id.clone()) {
                        return Err(bad(format!("sample `{}` recorded twice", e.sample_id)));
                    }
                    entries.push(e);
                }
                RecordLine::Summary(s) => summary = Some(s),
                RecordLine::Header(_) => return Err(bad("second header".into())),
            }
        }
        Ok(Some(PartialRecord { header, entries, summary }))
    }
}
