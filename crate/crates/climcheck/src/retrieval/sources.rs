//! The four evidence sources: provider payloads and their normalization.
//!
//! Providers return raw payloads; the `*Client` wrappers turn them into
//! evidence items. The raw payload types double as the on-disk fixture
//! format used by [`super::fixture`].

use std::fs::File;
use std::sync::Arc;

use climcheck_core::prompt::build_preview_prompt;
use climcheck_core::{EvidenceItem, MatchKind, PromptCatalog, SourceKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ClientError, Evidence, Query, SourceClient};
use crate::inference::{Backend, BackendError, CompletionRequest};

/// Items kept per source before assembly.
pub const MAX_ITEMS: usize = 10;

// ---------------------------------------------------------------------------
// Reverse image search

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawImageHit {
    pub match_kind: MatchKind,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub snippet: String,
    #[serde(default)]
    pub link: String,
    #[serde(default)]
    pub date: Option<String>,
    #[serde(default)]
    pub thumbnail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageSearchResponse {
    #[serde(default)]
    pub hits: Vec<RawImageHit>,
    #[serde(default)]
    pub about_this_image: Option<String>,
}

pub trait ImageSearchProvider: Send + Sync {
    fn reverse_search(&self, query: &Query<'_>) -> Result<ImageSearchResponse, ClientError>;
}

/// Drop thumbnail-only hits, put exact matches before visual ones (stable
/// within each group) and cap the list.
pub fn normalize_reverse_image(response: ImageSearchResponse) -> Evidence {
    let mut items: Vec<EvidenceItem> = response
        .hits
        .into_iter()
        .filter(|h| !h.link.trim().is_empty())
        .map(|h| {
            let mut item = EvidenceItem::new(h.title, h.snippet, h.link).with_match(h.match_kind);
            item.published = h.date;
            item
        })
        .filter(|item| !item.is_textless())
        .collect();
    items.sort_by_key(|i| i.match_kind);
    items.truncate(MAX_ITEMS);
    let about_image = response.about_this_image.filter(|a| !a.trim().is_empty());
    Evidence { items, about_image }
}

pub struct ReverseImageClient<P>(pub P);

impl<P: ImageSearchProvider> SourceClient for ReverseImageClient<P> {
    fn source(&self) -> SourceKind {
        SourceKind::ReverseImage
    }

    fn lookup(&self, query: &Query<'_>) -> Result<Evidence, ClientError> {
        File::open(query.image_path)
            .map_err(|e| ClientError::Provider(format!("image {} is unreadable: {e}", query.image_path.display())))?;
        Ok(normalize_reverse_image(self.0.reverse_search(query)?))
    }
}

// ---------------------------------------------------------------------------
// Claim-based web search

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawWebHit {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub snippet: String,
    #[serde(default)]
    pub link: String,
    #[serde(default)]
    pub date: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WebSearchResponse {
    #[serde(default)]
    pub organic: Vec<RawWebHit>,
}

pub trait WebSearchProvider: Send + Sync {
    fn search(&self, query: &Query<'_>, text: &str) -> Result<WebSearchResponse, ClientError>;
}

pub fn normalize_web_search(response: WebSearchResponse) -> Evidence {
    let items = response
        .organic
        .into_iter()
        .filter(|h| !h.link.trim().is_empty())
        .take(MAX_ITEMS)
        .map(|h| {
            let mut item = EvidenceItem::new(h.title, h.snippet, h.link);
            item.published = h.date;
            item
        })
        .collect();
    Evidence { items, about_image: None }
}

pub struct WebSearchClient<P>(pub P);

impl<P: WebSearchProvider> SourceClient for WebSearchClient<P> {
    fn source(&self) -> SourceKind {
        SourceKind::GoogleSearch
    }

    fn lookup(&self, query: &Query<'_>) -> Result<Evidence, ClientError> {
        let claim = query.sample.claim.trim();
        Ok(normalize_web_search(self.0.search(query, claim)?))
    }
}

// ---------------------------------------------------------------------------
// Fact-checking databases (ClaimReview-shaped payloads)

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Publisher {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub site: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RawReview {
    #[serde(default)]
    pub publisher: Publisher,
    #[serde(default)]
    pub url: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub review_date: Option<String>,
    #[serde(default)]
    pub textual_rating: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RawClaim {
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub claimant: Option<String>,
    #[serde(default)]
    pub claim_review: Vec<RawReview>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactCheckResponse {
    #[serde(default)]
    pub claims: Vec<RawClaim>,
}

pub trait FactCheckProvider: Send + Sync {
    fn lookup(&self, query: &Query<'_>, claim: &str) -> Result<FactCheckResponse, ClientError>;
}

/// One item per published review; the review's rating becomes the hint.
pub fn normalize_fact_checks(response: FactCheckResponse) -> Evidence {
    let items = response
        .claims
        .into_iter()
        .flat_map(|claim| {
            let text = claim.text;
            claim.claim_review.into_iter().map(move |r| (text.clone(), r))
        })
        .filter(|(_, r)| !r.url.trim().is_empty())
        .take(MAX_ITEMS)
        .map(|(text, r)| {
            let publisher = if r.publisher.name.is_empty() {
                r.publisher.site.clone().unwrap_or_else(|| "A fact-checker".into())
            } else {
                r.publisher.name.clone()
            };
            let title = if r.title.is_empty() { publisher.clone() } else { r.title };
            let snippet = if text.is_empty() {
                format!("Reviewed by {publisher}.")
            } else {
                format!("{publisher} reviewed the claim \"{text}\".")
            };
            let mut item = EvidenceItem::new(title, snippet, r.url);
            item.published = r.review_date.map(|d| d.chars().take(10).collect());
            item.verdict_hint = r.textual_rating.filter(|h| !h.trim().is_empty());
            item
        })
        .collect();
    Evidence { items, about_image: None }
}

pub struct FactCheckClient<P>(pub P);

impl<P: FactCheckProvider> SourceClient for FactCheckClient<P> {
    fn source(&self) -> SourceKind {
        SourceKind::FactCheck
    }

    fn lookup(&self, query: &Query<'_>) -> Result<Evidence, ClientError> {
        let claim = query.sample.claim.trim();
        Ok(normalize_fact_checks(self.0.lookup(query, claim)?))
    }
}

// ---------------------------------------------------------------------------
// Model-generated web previews

fn host_of(url: &str) -> String {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    rest.split(['/', '?', '#']).next().unwrap_or("").to_string()
}

fn preview_item(summary: &str, url: &str) -> Option<EvidenceItem> {
    let url = url.trim();
    if !(url.starts_with("http://") || url.starts_with("https://")) {
        return None;
    }
    Some(EvidenceItem::new(host_of(url), summary.trim(), url))
}

fn items_from_json(value: &Value) -> Option<Vec<EvidenceItem>> {
    let list = match value {
        Value::Array(a) => a,
        Value::Object(o) => o.get("previews").or_else(|| o.get("results"))?.as_array()?,
        _ => return None,
    };
    let items: Vec<_> = list
        .iter()
        .filter_map(|p| {
            let summary = p.get("summary").or_else(|| p.get("snippet"))?.as_str()?;
            let url = p.get("url").or_else(|| p.get("link"))?.as_str()?;
            preview_item(summary, url)
        })
        .collect();
    (!items.is_empty()).then_some(items)
}

/// Extract `(summary, url)` previews from a model reply: a JSON array of
/// `{summary, url}` objects if one is present, otherwise one preview per
/// line that contains a link.
pub fn parse_previews(text: &str) -> Vec<EvidenceItem> {
    for (i, _) in text.match_indices(['[', '{']) {
        let mut de = serde_json::Deserializer::from_str(&text[i..]);
        if let Ok(v) = Value::deserialize(&mut de) {
            if let Some(items) = items_from_json(&v) {
                return items.into_iter().take(MAX_ITEMS).collect();
            }
        }
    }
    text.lines()
        .filter_map(|line| {
            let start = line.find("https://").or_else(|| line.find("http://"))?;
            let end = line[start..].find(char::is_whitespace).map_or(line.len(), |e| start + e);
            let url = line[start..end].trim_end_matches(['.', ',', ')', ']', '>', ';']);
            let trim = |s: &str| s.trim_matches(|c: char| c.is_whitespace() || "-*•:()[]<>|".contains(c)).to_string();
            let before = trim(&line[..start]);
            let summary = if before.is_empty() { trim(&line[end..]) } else { before };
            preview_item(&summary, url)
        })
        .take(MAX_ITEMS)
        .collect()
}

pub struct GptPreviewClient {
    pub backend: Arc<dyn Backend>,
    pub catalog: Arc<PromptCatalog>,
    pub temperature: f64,
}

impl SourceClient for GptPreviewClient {
    fn source(&self) -> SourceKind {
        SourceKind::GptSearch
    }

    fn lookup(&self, query: &Query<'_>) -> Result<Evidence, ClientError> {
        let prompt = build_preview_prompt(&self.catalog, query.sample.claim.trim());
        let request = CompletionRequest {
            sample_id: &query.sample.id,
            variant: "",
            prompt: &prompt,
            images: Vec::new(),
            temperature: self.temperature,
        };
        let reply = self.backend.complete(&request).map_err(|e| match e {
            BackendError::Transport(m) => ClientError::Transport(m),
            BackendError::Rejected(m) => ClientError::Provider(m),
        })?;
        let items = parse_previews(&reply.raw_text);
        if items.is_empty() {
            return Err(ClientError::Provider("no source link".into()));
        }
        Ok(Evidence { items, about_image: None })
    }
}
