//! Evidence sources and the results they produce.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::Error;

/// External evidence source.
///
/// The derived ordering is the inclusion priority: fact-checks first,
/// Google web search last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    FactCheck,
    GptSearch,
    ReverseImage,
    GoogleSearch,
}

impl SourceKind {
    /// All sources in priority order.
    pub const ALL: [SourceKind; 4] =
        [SourceKind::FactCheck, SourceKind::GptSearch, SourceKind::ReverseImage, SourceKind::GoogleSearch];

    /// Stable lowercase key used in file names and run ids.
    pub fn key(self) -> &'static str {
        match self {
            SourceKind::FactCheck => "factcheck",
            SourceKind::GptSearch => "gptsearch",
            SourceKind::ReverseImage => "reverseimage",
            SourceKind::GoogleSearch => "googlesearch",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            SourceKind::FactCheck => "Fact check",
            SourceKind::GptSearch => "GPT Search",
            SourceKind::ReverseImage => "Reverse Image",
            SourceKind::GoogleSearch => "Google Search",
        }
    }

    pub fn from_key(key: &str) -> Option<SourceKind> {
        SourceKind::ALL.into_iter().find(|s| s.key().eq_ignore_ascii_case(key))
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// An ordered list of distinct sources. Empty means internal knowledge only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct SourceSet(Vec<SourceKind>);

impl SourceSet {
    pub fn new(sources: Vec<SourceKind>) -> Result<Self, Error> {
        for (i, s) in sources.iter().enumerate() {
            if sources[..i].contains(s) {
                return Err(Error::InvalidConfig(alloc::format!("duplicate source `{s}`")));
            }
        }
        Ok(SourceSet(sources))
    }

    pub fn internal() -> Self {
        SourceSet(Vec::new())
    }

    pub fn all() -> Self {
        SourceSet(SourceKind::ALL.to_vec())
    }

    /// Sources sorted by inclusion priority.
    pub fn by_priority(&self) -> Vec<SourceKind> {
        let mut v = self.0.clone();
        v.sort();
        v
    }

    /// Short name of the evidence setting: `internal`, a single source key,
    /// `combination` for all four, or keys joined with `+`.
    pub fn setting_key(&self) -> String {
        match self.0.len() {
            0 => "internal".into(),
            1 => self.0[0].key().into(),
            4 => "combination".into(),
            _ => {
                let keys: Vec<&str> = self.by_priority().iter().map(|s| s.key()).collect();
                keys.join("+")
            }
        }
    }

    pub fn display_name(&self) -> String {
        match self.0.len() {
            0 => "Internal".into(),
            1 => self.0[0].display_name().into(),
            4 => "Combination".into(),
            _ => {
                let names: Vec<&str> = self.by_priority().iter().map(|s| s.display_name()).collect();
                names.join(" + ")
            }
        }
    }
}

impl Deref for SourceSet {
    type Target = [SourceKind];

    fn deref(&self) -> &[SourceKind] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for SourceSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<SourceKind>::deserialize(deserializer)?;
        SourceSet::new(v).map_err(serde::de::Error::custom)
    }
}

/// Reverse-image match quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    /// Identical or nearly identical copy of the image.
    Exact,
    /// Image depicting a similar scene or entity.
    Visual,
}

impl MatchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchKind::Exact => "Exact",
            MatchKind::Visual => "Visual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub title: String,
    #[serde(rename = "snippet")]
    pub snippet_or_summary: String,
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_kind: Option<MatchKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict_hint: Option<String>,
}

impl EvidenceItem {
    pub fn new(title: impl Into<String>, snippet: impl Into<String>, url: impl Into<String>) -> Self {
        EvidenceItem {
            title: title.into(),
            snippet_or_summary: snippet.into(),
            url: url.into(),
            published: None,
            match_kind: None,
            verdict_hint: None,
        }
    }

    pub fn with_match(mut self, kind: MatchKind) -> Self {
        self.match_kind = Some(kind);
        self
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.verdict_hint = Some(hint.into());
        self
    }

    pub fn with_published(mut self, date: impl Into<String>) -> Self {
        self.published = Some(date.into());
        self
    }

    /// Items that carry neither a title nor any text (thumbnail-only hits).
    pub fn is_textless(&self) -> bool {
        self.title.trim().is_empty() && self.snippet_or_summary.trim().is_empty()
    }
}

/// Outcome of querying one source for one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceResult {
    pub source: SourceKind,
    pub items: Vec<EvidenceItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub about_image: Option<String>,
    pub success: bool,
    pub fetched_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SourceResult {
    /// A completed lookup. `success` follows from the payload.
    pub fn completed(
        source: SourceKind,
        items: Vec<EvidenceItem>,
        about_image: Option<String>,
        fetched_at: impl Into<String>,
    ) -> Self {
        let success = !items.is_empty() || about_image.is_some();
        SourceResult { source, items, about_image, success, fetched_at: fetched_at.into(), error: None }
    }

    /// A lookup that could not be completed.
    pub fn failed(source: SourceKind, error: impl Into<String>, fetched_at: impl Into<String>) -> Self {
        SourceResult {
            source,
            items: Vec::new(),
            about_image: None,
            success: false,
            fetched_at: fetched_at.into(),
            error: Some(error.into()),
        }
    }

    /// Checks the flag/payload consistency and the per-source item shape.
    pub fn is_consistent(&self) -> bool {
        let payload = !self.items.is_empty() || self.about_image.is_some();
        let shapes = self
            .items
            .iter()
            .all(|it| !it.url.is_empty() && (it.match_kind.is_some() == (self.source == SourceKind::ReverseImage)));
        self.success == payload && shapes
    }
}

/// All source results gathered for one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub sample_id: String,
    pub results: BTreeMap<SourceKind, SourceResult>,
}

impl EvidenceBundle {
    pub fn new(sample_id: impl Into<String>) -> Self {
        EvidenceBundle { sample_id: sample_id.into(), results: BTreeMap::new() }
    }

    pub fn insert(&mut self, result: SourceResult) {
        self.results.insert(result.source, result);
    }

    pub fn success_flags(&self) -> BTreeMap<SourceKind, bool> {
        self.results.iter().map(|(k, r)| (*k, r.success)).collect()
    }
}

/// Fraction of bundles in which each source returned usable evidence.
///
/// The denominator for a source is the number of bundles that queried it.
pub fn success_rates<'a, I>(flags: I) -> Result<BTreeMap<SourceKind, f64>, Error>
where
    I: IntoIterator<Item = &'a BTreeMap<SourceKind, bool>>,
{
    let mut tallies: BTreeMap<SourceKind, (usize, usize)> = BTreeMap::new();
    let mut seen = 0usize;
    for bundle in flags {
        seen += 1;
        for (kind, ok) in bundle {
            let t = tallies.entry(*kind).or_default();
            t.1 += 1;
            if *ok {
                t.0 += 1;
            }
        }
    }
    if seen == 0 {
        return Err(Error::EmptyInput("no evidence bundles"));
    }
    Ok(tallies.into_iter().map(|(k, (ok, n))| (k, ok as f64 / n as f64)).collect())
}

/// [`success_rates`] over full bundles.
pub fn bundle_success_rates(bundles: &[EvidenceBundle]) -> Result<BTreeMap<SourceKind, f64>, Error> {
    let flags: Vec<_> = bundles.iter().map(EvidenceBundle::success_flags).collect();
    success_rates(&flags)
}
