//! Classification and behavioural metrics over a run's verdicts.
//!
//! Rejected samples (fallback replies) are excluded from accuracy, the
//! confusion matrix and the macro scores; they only enter the rejection
//! rate. Values are kept as exact ratios and rounded half-up only when
//! formatted for display.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evidence::{success_rates, SourceKind};
use crate::label::{Label, Scheme};
use crate::verdict::{FallbackReason, Outcome};

/// Counts indexed `(gold, predicted)` over the labels of one scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<Label>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(scheme: Scheme) -> Self {
        let n = scheme.labels().len();
        ConfusionMatrix { labels: scheme.labels().to_vec(), counts: vec![vec![0; n]; n] }
    }

    pub fn from_pairs<I>(scheme: Scheme, pairs: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = (Label, Label)>,
    {
        let mut m = ConfusionMatrix::new(scheme);
        for (gold, pred) in pairs {
            m.add(gold, pred)?;
        }
        Ok(m)
    }

    fn index(&self, label: Label) -> Result<usize, Error> {
        self.labels.iter().position(|&l| l == label).ok_or_else(|| Error::UnknownLabel(label.as_str().into()))
    }

    pub fn add(&mut self, gold: Label, pred: Label) -> Result<(), Error> {
        let (g, p) = (self.index(gold)?, self.index(pred)?);
        self.counts[g][p] += 1;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.dim()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, gold: usize) -> u64 {
        self.counts[gold].iter().sum()
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        self.counts.iter().map(|row| row[pred]).sum()
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim();
        ConfusionMatrix {
            labels: self.labels.clone(),
            counts: (0..n).map(|i| (0..n).map(|j| self.counts[j][i]).collect()).collect(),
        }
    }

    /// Header row of label names, then one row per gold label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\predicted");
        for l in &self.labels {
            out.push(',');
            out.push_str(l.as_str());
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.counts) {
            out.push_str(label.as_str());
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Percentage of exact matches, `100 · matches / n`.
pub fn accuracy(preds: &[Label], golds: &[Label]) -> Result<f64, Error> {
    if preds.len() != golds.len() {
        return Err(Error::InvalidCounts("predictions and gold labels differ in length"));
    }
    if preds.is_empty() {
        return Err(Error::EmptyInput("no predictions"));
    }
    let matches = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(percent(matches as u64, preds.len() as u64))
}

fn percent(num: u64, den: u64) -> f64 {
    100.0 * num as f64 / den as f64
}

/// `fallbacks / total`.
pub fn rejection_rate(fallbacks: u64, total: u64) -> Result<f64, Error> {
    if total == 0 {
        return Err(Error::EmptyInput("no samples"));
    }
    if fallbacks > total {
        return Err(Error::InvalidCounts("more fallbacks than samples"));
    }
    Ok(fallbacks as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold count for the class.
    pub support: u64,
}

/// Unweighted means over the classes present in gold or predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio_or_zero(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision, recall and F1 for every class that occurs in the
/// gold labels or the predictions. Undefined ratios are 0.
pub fn per_class(matrix: &ConfusionMatrix) -> Vec<ClassScores> {
    (0..matrix.dim())
        .filter_map(|i| {
            let tp = matrix.counts[i][i];
            let (support, predicted) = (matrix.row_sum(i), matrix.col_sum(i));
            if support == 0 && predicted == 0 {
                return None;
            }
            let precision = ratio_or_zero(tp, predicted);
            let recall = ratio_or_zero(tp, support);
            let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            Some(ClassScores { label: matrix.labels[i], precision, recall, f1, support })
        })
        .collect()
}

pub fn macro_scores(matrix: &ConfusionMatrix) -> Result<MacroScores, Error> {
    let classes = per_class(matrix);
    if classes.is_empty() {
        return Err(Error::EmptyInput("confusion matrix is all zeros"));
    }
    let n = classes.len() as f64;
    let mean = |f: fn(&ClassScores) -> f64| classes.iter().map(f).sum::<f64>() / n;
    Ok(MacroScores { precision: mean(|c| c.precision), recall: mean(|c| c.recall), f1: mean(|c| c.f1) })
}

/// Predicted-label frequencies in scheme order, zero counts included.
pub fn label_distribution<I>(scheme: Scheme, preds: I) -> BTreeMap<Label, u64>
where
    I: IntoIterator<Item = Label>,
{
    let mut dist: BTreeMap<Label, u64> = scheme.labels().iter().map(|&l| (l, 0)).collect();
    for p in preds {
        *dist.entry(p).or_default() += 1;
    }
    dist
}

/// Round half-up to `decimals` places and format. Intended for the
/// non-negative quantities reported here.
pub fn fmt_fixed(value: f64, decimals: u32) -> String {
    let scale = 10u64.pow(decimals);
    let negative = value < 0.0;
    let scaled = (value.abs() * scale as f64 + 0.5 + 1e-9) as u64;
    let sign = if negative && scaled > 0 { "-" } else { "" };
    format_scaled(sign, scaled, scale, decimals)
}

/// Exact half-up rounding of `100 · num / den` to `decimals` places.
pub fn fmt_percent_ratio(num: u64, den: u64, decimals: u32) -> String {
    let scale = 10u64.pow(decimals);
    let (num, den) = (num as u128, den.max(1) as u128);
    let scaled = (2 * num * 100 * scale as u128 + den) / (2 * den);
    format_scaled("", scaled as u64, scale, decimals)
}

fn format_scaled(sign: &str, scaled: u64, scale: u64, decimals: u32) -> String {
    if decimals == 0 {
        return format!("{sign}{scaled}");
    }
    format!("{sign}{}.{:0width$}", scaled / scale, scaled % scale, width = decimals as usize)
}

/// `1234567` → `1,234,567`.
pub fn fmt_thousands(n: u64) -> String {
    let digits = format!("{n}");
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// One sample's contribution to a report.
#[derive(Debug, Clone, Copy)]
pub struct EvaluatedSample<'a> {
    pub gold: Option<Label>,
    pub outcome: &'a Outcome,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_s: f64,
    pub sources: &'a BTreeMap<SourceKind, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    /// Non-rejected samples with a gold label.
    pub evaluated: u64,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScores>,
    pub confusion: ConfusionMatrix,
}

/// Display strings in the layout of the results tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayRow {
    pub accuracy: String,
    pub precision: String,
    pub recall: String,
    pub f1: String,
    /// Percent, one decimal.
    pub rejection_rate: String,
    pub confidence: String,
    pub total_tokens: String,
    pub avg_prompt: String,
    pub avg_time_s: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: Scheme,
    pub samples: u64,
    pub rejected: u64,
    pub classification: Option<Classification>,
    pub label_distribution: BTreeMap<Label, u64>,
    pub rejection_rate: f64,
    pub fallback_reasons: BTreeMap<FallbackReason, u64>,
    pub confidence_avg: Option<f64>,
    pub total_tokens: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Mean prompt tokens per sample.
    pub avg_prompt_tokens: f64,
    /// Mean prompt plus completion tokens per sample.
    pub avg_total_tokens: f64,
    pub avg_time_s: f64,
    pub success_rates: BTreeMap<SourceKind, f64>,
    pub display: DisplayRow,
}

impl EvalReport {
    pub fn require_classification(&self) -> Result<&Classification, Error> {
        self.classification.as_ref().ok_or(Error::EmptyInput("no non-rejected sample carries a gold label"))
    }
}

pub fn build_report(samples: &[EvaluatedSample<'_>], scheme: Scheme) -> Result<EvalReport, Error> {
    let total = samples.len() as u64;
    if total == 0 {
        return Err(Error::EmptyInput("run has no samples"));
    }

    let mut rejected = 0u64;
    let mut fallback_reasons = BTreeMap::new();
    let mut predictions = Vec::new();
    let mut confusion = ConfusionMatrix::new(scheme);
    let (mut conf_sum, mut conf_n) = (0u64, 0u64);
    for s in samples {
        match s.outcome {
            Outcome::Fallback(f) => {
                rejected += 1;
                *fallback_reasons.entry(f.reason).or_insert(0) += 1;
            }
            Outcome::Verdict(v) => {
                predictions.push(v.label);
                if let Some(c) = v.confidence {
                    conf_sum += u64::from(c);
                    conf_n += 1;
                }
                if let Some(gold) = s.gold.and_then(|g| g.project(scheme)) {
                    confusion.add(gold, v.label)?;
                }
            }
        }
    }

    let evaluated = confusion.total();
    let classification = if evaluated == 0 {
        None
    } else {
        let m = macro_scores(&confusion)?;
        Some(Classification {
            evaluated,
            accuracy: percent(confusion.trace(), evaluated),
            macro_precision: 100.0 * m.precision,
            macro_recall: 100.0 * m.recall,
            macro_f1: 100.0 * m.f1,
            per_class: per_class(&confusion),
            confusion,
        })
    };

    let prompt_tokens: u64 = samples.iter().map(|s| s.prompt_tokens).sum();
    let completion_tokens: u64 = samples.iter().map(|s| s.completion_tokens).sum();
    let total_tokens = prompt_tokens + completion_tokens;
    let latency: f64 = samples.iter().map(|s| s.latency_s).sum();
    let confidence_avg = (conf_n > 0).then(|| conf_sum as f64 / conf_n as f64);
    let avg_prompt_tokens = prompt_tokens as f64 / total as f64;
    let avg_time_s = latency / total as f64;

    let success_rates = if samples.iter().all(|s| s.sources.is_empty()) {
        BTreeMap::new()
    } else {
        success_rates(samples.iter().map(|s| s.sources))?
    };

    let dash = || String::from("-");
    let display = DisplayRow {
        accuracy: classification.as_ref().map_or_else(dash, |c| fmt_percent_ratio(c.confusion.trace(), c.evaluated, 2)),
        precision: classification.as_ref().map_or_else(dash, |c| fmt_fixed(c.macro_precision, 2)),
        recall: classification.as_ref().map_or_else(dash, |c| fmt_fixed(c.macro_recall, 2)),
        f1: classification.as_ref().map_or_else(dash, |c| fmt_fixed(c.macro_f1, 2)),
        rejection_rate: fmt_percent_ratio(rejected, total, 1),
        confidence: confidence_avg.map_or_else(dash, |c| fmt_fixed(c, 2)),
        total_tokens: fmt_thousands(total_tokens),
        avg_prompt: fmt_fixed(avg_prompt_tokens, 1),
        avg_time_s: fmt_fixed(avg_time_s, 2),
    };

    Ok(EvalReport {
        scheme,
        samples: total,
        rejected,
        classification,
        label_distribution: label_distribution(scheme, predictions),
        rejection_rate: rejection_rate(rejected, total)?,
        fallback_reasons,
        confidence_avg,
        total_tokens,
        prompt_tokens,
        completion_tokens,
        avg_prompt_tokens,
        avg_total_tokens: total_tokens as f64 / total as f64,
        avg_time_s,
        success_rates,
        display,
    })
}
