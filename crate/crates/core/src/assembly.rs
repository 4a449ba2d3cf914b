//! Evidence context assembly under a token budget.
//!
//! Blocks are always emitted in source priority order. In conditional mode
//! inclusion stops at the first source that does not fit whole; that source
//! keeps as many leading items as fit (or is dropped if not even one does),
//! and every lower-priority source is dropped. Concat mode includes every
//! successful source and trims trailing items from the lowest-priority block
//! upward until the budget holds.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evidence::{EvidenceBundle, SourceKind, SourceResult, SourceSet};
use crate::settings::AssemblyMode;

/// Byte-length token heuristic: `ceil(len / 4)`.
pub fn estimate_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

fn header(source: SourceKind) -> &'static str {
    match source {
        SourceKind::FactCheck => "Fact-checking sites:",
        SourceKind::GptSearch => "Web previews (GPT search):",
        SourceKind::ReverseImage => "Reverse image search:",
        SourceKind::GoogleSearch => "Claim-based web search:",
    }
}

fn render_prefix(result: &SourceResult, n_items: usize) -> String {
    let mut out = String::from(header(result.source));
    for item in result.items.iter().take(n_items) {
        out.push_str("\n- ");
        let tag = item.match_kind.map(|m| m.as_str()).or(item.verdict_hint.as_deref());
        if let Some(tag) = tag {
            let _ = write!(out, "[{tag}] ");
        }
        let _ = write!(out, "{} — {} ({}", item.title, item.snippet_or_summary, item.url);
        if let Some(date) = &item.published {
            let _ = write!(out, ", published {date}");
        }
        out.push(')');
    }
    if let Some(about) = &result.about_image {
        let _ = write!(out, "\nAbout this image: {about}");
    }
    out
}

/// Deterministic plain-text rendering of a successful source result.
pub fn render_block(result: &SourceResult) -> Result<String, Error> {
    if !result.success {
        return Err(Error::RenderFailedResult);
    }
    Ok(render_prefix(result, result.items.len()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub source: SourceKind,
    pub text: String,
    /// Number of leading items kept from the source result.
    pub items: usize,
    pub est_tokens: usize,
}

/// Ordered evidence blocks handed to the model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembledContext {
    pub blocks: Vec<ContextBlock>,
    pub est_tokens: usize,
    pub dropped: Vec<SourceKind>,
}

impl AssembledContext {
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn sources(&self) -> Vec<SourceKind> {
        self.blocks.iter().map(|b| b.source).collect()
    }

    /// Blocks joined by blank lines.
    pub fn evidence_text(&self) -> String {
        let parts: Vec<&str> = self.blocks.iter().map(|b| b.text.as_str()).collect();
        parts.join("\n\n")
    }
}

/// What to assemble and under which limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssemblyPlan {
    pub sources: SourceSet,
    pub mode: AssemblyMode,
    pub token_budget: usize,
}

fn min_items(result: &SourceResult) -> usize {
    usize::from(!result.items.is_empty())
}

fn block(result: &SourceResult, n: usize) -> ContextBlock {
    let text = render_prefix(result, n);
    ContextBlock { source: result.source, est_tokens: estimate_tokens(&text), text, items: n }
}

/// Largest leading slice of `result` whose block fits in `remaining`.
fn fit(result: &SourceResult, remaining: usize) -> Option<ContextBlock> {
    (min_items(result)..=result.items.len()).rev().map(|n| block(result, n)).find(|b| b.est_tokens <= remaining)
}

pub fn assemble(bundle: &EvidenceBundle, plan: &AssemblyPlan) -> AssembledContext {
    let mut usable = Vec::new();
    let mut dropped = Vec::new();
    for source in plan.sources.by_priority() {
        match bundle.results.get(&source) {
            Some(r) if r.success => usable.push(r),
            _ => dropped.push(source),
        }
    }

    let blocks = match plan.mode {
        AssemblyMode::Conditional => conditional(&usable, plan.token_budget, &mut dropped),
        AssemblyMode::Concat => concat(&usable, plan.token_budget, &mut dropped),
    };
    dropped.sort();
    AssembledContext { est_tokens: blocks.iter().map(|b| b.est_tokens).sum(), blocks, dropped }
}

fn conditional(usable: &[&SourceResult], budget: usize, dropped: &mut Vec<SourceKind>) -> Vec<ContextBlock> {
    let mut blocks = Vec::new();
    let mut used = 0;
    let mut overflowed = false;
    for result in usable {
        if overflowed {
            dropped.push(result.source);
            continue;
        }
        match fit(result, budget - used) {
            Some(b) => {
                overflowed = b.items < result.items.len();
                used += b.est_tokens;
                blocks.push(b);
            }
            None => {
                overflowed = true;
                dropped.push(result.source);
            }
        }
    }
    blocks
}

fn concat(usable: &[&SourceResult], budget: usize, dropped: &mut Vec<SourceKind>) -> Vec<ContextBlock> {
    let mut kept: Vec<(&SourceResult, ContextBlock)> = usable.iter().map(|r| (*r, block(r, r.items.len()))).collect();
    let mut total: usize = kept.iter().map(|(_, b)| b.est_tokens).sum();
    while total > budget {
        let Some((result, last)) = kept.last_mut() else { break };
        total -= last.est_tokens;
        if last.items > min_items(result) {
            *last = block(result, last.items - 1);
            total += last.est_tokens;
        } else {
            dropped.push(result.source);
            kept.pop();
        }
    }
    kept.into_iter().map(|(_, b)| b).collect()
}
