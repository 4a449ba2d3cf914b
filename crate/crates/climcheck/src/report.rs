//! Per-run report files and the cross-run summary grid.
//!
//! A run directory receives `report.json` (the full evaluation),
//! `confusion.csv` and a one-row `summary.txt`; sweeps and the `report`
//! command write a combined `summary.txt` with one row per run.

use std::fs;
use std::path::Path;

use climcheck_core::metrics::fmt_fixed;
use climcheck_core::{build_report, EvalReport};
use serde::{Deserialize, Serialize};

use crate::error::RunError;
use crate::fsutil;
use crate::runner::RunRecord;

pub const REPORT_FILE: &str = "report.json";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub strategy: String,
    /// Evidence setting key, e.g. `combination`.
    pub setting: String,
    /// Evidence setting as shown in tables, e.g. `Combination`.
    pub setting_name: String,
    pub degraded: bool,
    pub report: EvalReport,
}

impl RunReport {
    pub fn from_record(record: &RunRecord) -> Result<RunReport, RunError> {
        let settings = record.settings();
        let samples: Vec<_> = record.entries.iter().map(|e| e.evaluated()).collect();
        Ok(RunReport {
            run_id: record.run_id().to_string(),
            strategy: settings.strategy.display_name().to_string(),
            setting: settings.sources.setting_key(),
            setting_name: settings.sources.display_name(),
            degraded: record.degraded(),
            report: build_report(&samples, settings.scheme)?,
        })
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("reports serialize");
        bytes.push(b'\n');
        bytes
    }

    pub fn load(path: &Path) -> Result<RunReport, RunError> {
        let bytes = fs::read(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_slice(&bytes)
            .map_err(|e| RunError::Record { path: path.to_path_buf(), message: e.to_string() })
    }

    fn row(&self) -> [String; COLUMNS.len()] {
        let r = &self.report;
        let d = &r.display;
        [
            self.run_id.clone(),
            r.scheme.tag().to_string(),
            self.strategy.clone(),
            self.setting_name.clone(),
            d.accuracy.clone(),
            d.precision.clone(),
            d.recall.clone(),
            d.f1.clone(),
            d.rejection_rate.clone(),
            d.confidence.clone(),
            d.total_tokens.clone(),
            d.avg_prompt.clone(),
            fmt_fixed(r.avg_total_tokens, 1),
            d.avg_time_s.clone(),
        ]
    }
}

const COLUMNS: [&str; 14] = [
    "Run",
    "Scheme",
    "Strategy",
    "Source",
    "Accuracy",
    "Precision",
    "Recall",
    "F1",
    "Rejection (%)",
    "Confidence",
    "Total tokens",
    "Avg prompt",
    "Avg total",
    "Avg time (s)",
];

/// Leading text columns are left-aligned, numeric ones right-aligned.
const TEXT_COLUMNS: usize = 4;

/// Fixed-width grid, one line per run in the given order.
pub fn summary_table(reports: &[RunReport]) -> String {
    let rows: Vec<_> = reports.iter().map(RunReport::row).collect();
    let mut widths = COLUMNS.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let render = |cells: &[String]| {
        let line =
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i < TEXT_COLUMNS {
                        format!("{c:<w$}", w = widths[i])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect::<Vec<_>>()
                .join("  ");
        line.trim_end().to_string()
    };
    let header: Vec<String> = COLUMNS.iter().map(|c| c.to_string()).collect();
    let mut out = render(&header);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &rows {
        out.push_str(&render(row));
        out.push('\n');
    }
    out
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    fsutil::write_atomic(path, bytes).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Write the report files for one run into `dir`.
pub fn write_run_report(dir: &Path, report: &RunReport) -> Result<(), RunError> {
    write(&dir.join(REPORT_FILE), &report.to_json())?;
    let csv = report.report.classification.as_ref().map(|c| c.confusion.to_csv()).unwrap_or_default();
    write(&dir.join(CONFUSION_FILE), csv.as_bytes())?;
    write(&dir.join(SUMMARY_FILE), summary_table(std::slice::from_ref(report)).as_bytes())
}

pub fn write_summary(path: &Path, reports: &[RunReport]) -> Result<(), RunError> {
    write(path, summary_table(reports).as_bytes())
}
