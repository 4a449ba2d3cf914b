//! Prompt construction from a versioned template catalog.
//!
//! Verdict prompts are assembled section by section in a fixed order:
//! framing, label definitions, evidence, claim, strategy instruction, reply
//! schema. Role prompts drive ensemble labeling.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::assembly::AssembledContext;
use crate::error::Error;
use crate::label::{Label, Scheme};
use crate::sample::Sample;
use crate::settings::Strategy;

/// The catalog shipped with the crate.
pub const BUILTIN_CATALOG: &str = include_str!("../assets/prompts.catalog");

const REQUIRED: &[&str] = &[
    "verdict.system",
    "verdict.framing",
    "labels.4class",
    "labels.2class",
    "evidence.present",
    "evidence.absent",
    "claim",
    "strategy.cot",
    "strategy.cod",
    "schema.verdict",
    "schema.verdict_drafts",
    "role.system",
    "role.neutral",
    "role.climate_scientist",
    "role.policy_advisor",
    "role.fact_check_reviewer",
    "role.description_only",
    "schema.role",
    "preview.system",
    "preview.user",
];

/// Substitute `{name}` placeholders in one pass. Unknown or malformed
/// placeholders are copied through, and substituted text is never rescanned.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(after.len());
        let value = (after[name_len..].starts_with('}') && name_len > 0)
            .then(|| vars.iter().find(|(k, _)| *k == &after[..name_len]))
            .flatten();
        match value {
            Some((_, v)) => {
                out.push_str(v);
                rest = &after[name_len + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Template id → body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptCatalog {
    templates: BTreeMap<String, String>,
}

impl PromptCatalog {
    /// Parse the sectioned catalog format: `@@ <id>` opens a template whose
    /// body runs to the next `@@` line. Text before the first section is
    /// ignored.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut templates = BTreeMap::new();
        let mut current: Option<(String, Vec<&str>)> = None;
        let mut finish = |cur: Option<(String, Vec<&str>)>| -> Result<(), Error> {
            if let Some((id, mut lines)) = cur {
                while lines.last().is_some_and(|l| l.trim().is_empty()) {
                    lines.pop();
                }
                if templates.insert(id.clone(), lines.join("\n")).is_some() {
                    return Err(Error::Catalog(format!("template `{id}` defined twice")));
                }
            }
            Ok(())
        };
        for line in text.lines() {
            if let Some(id) = line.strip_prefix("@@") {
                let id = id.trim();
                if id.is_empty() {
                    return Err(Error::Catalog("section marker without an id".into()));
                }
                finish(current.take())?;
                current = Some((id.to_string(), Vec::new()));
            } else if let Some((_, lines)) = current.as_mut() {
                lines.push(line);
            }
        }
        finish(current.take())?;
        PromptCatalog::from_templates(templates)
    }

    pub fn from_templates(templates: BTreeMap<String, String>) -> Result<Self, Error> {
        for id in REQUIRED {
            match templates.get(*id) {
                None => return Err(Error::Catalog(format!("missing template `{id}`"))),
                Some(body) if body.trim().is_empty() => {
                    return Err(Error::Catalog(format!("template `{id}` is empty")))
                }
                _ => {}
            }
        }
        Ok(PromptCatalog { templates })
    }

    pub fn builtin() -> Self {
        PromptCatalog::parse(BUILTIN_CATALOG).expect("builtin catalog is valid")
    }

    pub fn get(&self, id: &str) -> &str {
        self.templates.get(id).map(String::as_str).unwrap_or("")
    }
}

/// Perspective framing used by ensemble labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Neutral,
    ClimateScientist,
    PolicyAdvisor,
    FactCheckReviewer,
    /// Labels from the expert description alone; binary scheme only.
    DescriptionOnly,
}

impl Role {
    pub fn key(self) -> &'static str {
        match self {
            Role::Neutral => "neutral",
            Role::ClimateScientist => "climate_scientist",
            Role::PolicyAdvisor => "policy_advisor",
            Role::FactCheckReviewer => "fact_check_reviewer",
            Role::DescriptionOnly => "description_only",
        }
    }

    /// Roles voting under `scheme`, in vote order.
    pub fn for_scheme(scheme: Scheme) -> &'static [Role] {
        const FOUR: [Role; 4] = [Role::Neutral, Role::ClimateScientist, Role::PolicyAdvisor, Role::FactCheckReviewer];
        const FIVE: [Role; 5] = [
            Role::Neutral,
            Role::ClimateScientist,
            Role::PolicyAdvisor,
            Role::FactCheckReviewer,
            Role::DescriptionOnly,
        ];
        match scheme {
            Scheme::FourClass => &FOUR,
            Scheme::TwoClass => &FIVE,
        }
    }
}

/// The structured reply a prompt asks for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplySchema {
    pub labels: Vec<Label>,
    /// Whether a `drafts` list is requested.
    pub drafts: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    /// Key identifying the template family, e.g. `verdict_cod_4class`.
    pub template_id: String,
    pub system_text: String,
    pub user_text: String,
    pub image_refs: Vec<String>,
    pub expected_schema: ReplySchema,
}

pub fn verdict_template_id(strategy: Strategy, scheme: Scheme) -> String {
    format!("verdict_{}_{}", strategy.tag(), scheme.tag())
}

pub fn role_template_id(role: Role, scheme: Scheme) -> String {
    format!("role_{}_{}", role.key(), scheme.tag())
}

pub const PREVIEW_TEMPLATE_ID: &str = "gpt_preview";

fn label_list(scheme: Scheme) -> String {
    let quoted: Vec<String> = scheme.labels().iter().map(|l| format!("\"{l}\"")).collect();
    quoted.join(" | ")
}

fn label_definitions(catalog: &PromptCatalog, scheme: Scheme) -> &str {
    match scheme {
        Scheme::FourClass => catalog.get("labels.4class"),
        Scheme::TwoClass => catalog.get("labels.2class"),
    }
}

pub fn build_verdict_prompt(
    catalog: &PromptCatalog,
    sample: &Sample,
    context: &AssembledContext,
    strategy: Strategy,
    scheme: Scheme,
) -> PromptSpec {
    let labels = label_list(scheme);
    let evidence_text = context.evidence_text();
    let evidence = if context.is_empty() {
        catalog.get("evidence.absent").to_string()
    } else {
        fill(catalog.get("evidence.present"), &[("evidence", &evidence_text)])
    };
    let (strategy_text, schema_id) = match strategy {
        Strategy::ChainOfThought => (catalog.get("strategy.cot"), "schema.verdict"),
        Strategy::ChainOfDraft => (catalog.get("strategy.cod"), "schema.verdict_drafts"),
    };
    let sections = [
        catalog.get("verdict.framing").to_string(),
        label_definitions(catalog, scheme).to_string(),
        evidence,
        fill(catalog.get("claim"), &[("claim", &sample.claim)]),
        strategy_text.to_string(),
        fill(catalog.get(schema_id), &[("labels", &labels)]),
    ];
    PromptSpec {
        template_id: verdict_template_id(strategy, scheme),
        system_text: catalog.get("verdict.system").to_string(),
        user_text: sections.join("\n\n"),
        image_refs: vec![sample.image_ref.clone()],
        expected_schema: ReplySchema { labels: scheme.labels().to_vec(), drafts: strategy == Strategy::ChainOfDraft },
    }
}

pub fn build_role_prompt(
    catalog: &PromptCatalog,
    sample: &Sample,
    role: Role,
    scheme: Scheme,
) -> Result<PromptSpec, Error> {
    let labels = label_list(scheme);
    let framing_id = format!("role.{}", role.key());
    let mut sections = Vec::new();
    let image_refs = if role == Role::DescriptionOnly {
        if scheme != Scheme::TwoClass {
            return Err(Error::Prompt("description-only role is limited to the binary scheme"));
        }
        let description = sample
            .description
            .as_deref()
            .filter(|d| !d.trim().is_empty())
            .ok_or(Error::Prompt("description-only role needs a sample description"))?;
        sections.push(fill(catalog.get(&framing_id), &[("description", description)]));
        sections.push(label_definitions(catalog, scheme).to_string());
        Vec::new()
    } else {
        sections.push(catalog.get(&framing_id).to_string());
        sections.push(label_definitions(catalog, scheme).to_string());
        sections.push(fill(catalog.get("claim"), &[("claim", &sample.claim)]));
        vec![sample.image_ref.clone()]
    };
    sections.push(fill(catalog.get("schema.role"), &[("labels", &labels)]));
    Ok(PromptSpec {
        template_id: role_template_id(role, scheme),
        system_text: catalog.get("role.system").to_string(),
        user_text: sections.join("\n\n"),
        image_refs,
        expected_schema: ReplySchema { labels: scheme.labels().to_vec(), drafts: false },
    })
}

/// Prompt asking the backend for web previews of `claim`.
pub fn build_preview_prompt(catalog: &PromptCatalog, claim: &str) -> PromptSpec {
    PromptSpec {
        template_id: PREVIEW_TEMPLATE_ID.into(),
        system_text: catalog.get("preview.system").to_string(),
        user_text: fill(catalog.get("preview.user"), &[("claim", claim)]),
        image_refs: Vec::new(),
        expected_schema: ReplySchema { labels: Vec::new(), drafts: false },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::ContextBlock;
    use crate::evidence::SourceKind;

    fn sample() -> Sample {
        Sample {
            id: "s1".into(),
            claim: "Arctic sea ice  has {evidence} fully recovered since 2012!".into(),
            image_ref: "images/s1.png".into(),
            description: Some("A chart of sea ice extent.".into()),
            gold: None,
        }
    }

    fn context() -> AssembledContext {
        let blocks = SourceKind::ALL
            .iter()
            .map(|&s| ContextBlock { source: s, text: format!("BLOCK-{}", s.key()), items: 1, est_tokens: 3 })
            .collect();
        AssembledContext { blocks, est_tokens: 12, dropped: vec![] }
    }

    #[test]
    fn fill_single_pass() {
        assert_eq!(fill("a {x} b {y}", &[("x", "{y}"), ("y", "Y")]), "a {y} b Y");
        assert_eq!(fill("{\"label\": {labels}}", &[("labels", "L")]), "{\"label\": L}");
        assert_eq!(fill("{unknown} {", &[]), "{unknown} {");
    }

    #[test]
    fn builtin_catalog_parses() {
        let cat = PromptCatalog::builtin();
        assert!(cat.get("labels.4class").to_lowercase().contains("too vague, sarcastic, or lacking sufficient detail"));
        assert!(PromptCatalog::parse("@@ claim\nClaim: {claim}").is_err());
        assert!(PromptCatalog::parse(&format!("{BUILTIN_CATALOG}\n@@ claim\nagain")).is_err());
    }

    #[test]
    fn internal_only_cot_four_class() {
        let cat = PromptCatalog::builtin();
        let p = build_verdict_prompt(
            &cat,
            &sample(),
            &AssembledContext::default(),
            Strategy::ChainOfThought,
            Scheme::FourClass,
        );
        for l in ["Accurate:", "Misleading:", "False:", "Unverifiable:"] {
            assert!(p.user_text.contains(l), "{l}");
        }
        assert!(p.user_text.contains("No external evidence is available"));
        assert!(p.user_text.contains(&sample().claim));
        assert_eq!(p.image_refs, ["images/s1.png"]);
        assert_eq!(p.template_id, "verdict_cot_4class");
        assert!(!p.expected_schema.drafts);
    }

    #[test]
    fn cod_four_blocks_in_order() {
        let cat = PromptCatalog::builtin();
        let p = build_verdict_prompt(&cat, &sample(), &context(), Strategy::ChainOfDraft, Scheme::FourClass);
        let pos: Vec<usize> =
            SourceKind::ALL.iter().map(|s| p.user_text.find(&format!("BLOCK-{}", s.key())).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(p.user_text.contains("drafts"));
        assert!(p.user_text.contains("select the most coherent"));
        assert!(p.expected_schema.drafts);
    }

    #[test]
    fn section_order() {
        let cat = PromptCatalog::builtin();
        let s = sample();
        let p = build_verdict_prompt(&cat, &s, &context(), Strategy::ChainOfThought, Scheme::TwoClass);
        let at = |needle: &str| p.user_text.find(needle).unwrap();
        let order = [
            at(cat.get("verdict.framing")),
            at("Disinformation:"),
            at("BLOCK-factcheck"),
            at(&s.claim),
            at(cat.get("strategy.cot")),
            at("Finish with exactly one JSON object"),
        ];
        assert!(order.windows(2).all(|w| w[0] < w[1]), "{order:?}");
        assert_eq!(p.expected_schema.labels, [Label::Accurate, Label::Disinformation]);
    }

    #[test]
    fn role_prompts() {
        let cat = PromptCatalog::builtin();
        let s = sample();
        let sci = build_role_prompt(&cat, &s, Role::ClimateScientist, Scheme::FourClass).unwrap();
        assert!(sci.user_text.contains("IPCC") && sci.user_text.contains("NASA"));
        let neutral = build_role_prompt(&cat, &s, Role::Neutral, Scheme::TwoClass).unwrap();
        assert_eq!(neutral.image_refs, std::slice::from_ref(&s.image_ref));
        assert!(neutral.user_text.contains("caution toward emotionally persuasive content"));
        let advisor = build_role_prompt(&cat, &s, Role::PolicyAdvisor, Scheme::FourClass).unwrap();
        assert!(advisor.user_text.contains("whether the image supports or contradicts the claim"));
        let reviewer = build_role_prompt(&cat, &s, Role::FactCheckReviewer, Scheme::FourClass).unwrap();
        assert!(reviewer.user_text.contains("potential visual manipulation and contradictions"));

        assert!(build_role_prompt(&cat, &s, Role::DescriptionOnly, Scheme::FourClass).is_err());
        let d = build_role_prompt(&cat, &s, Role::DescriptionOnly, Scheme::TwoClass).unwrap();
        assert!(d.image_refs.is_empty());
        assert!(d.user_text.contains("A chart of sea ice extent."));
        let mut bare = s.clone();
        bare.description = None;
        assert!(build_role_prompt(&cat, &bare, Role::DescriptionOnly, Scheme::TwoClass).is_err());
    }

    #[test]
    fn role_sets() {
        assert_eq!(Role::for_scheme(Scheme::FourClass).len(), 4);
        assert!(!Role::for_scheme(Scheme::FourClass).contains(&Role::DescriptionOnly));
        assert_eq!(Role::for_scheme(Scheme::TwoClass).len(), 5);
    }
}
