//! Model replies and their interpretation as verdicts.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::label::{Label, Scheme};

/// Raw backend reply with usage accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub raw_text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_s: f64,
}

impl ModelResponse {
    pub fn total_tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    /// Self-reported confidence on a 0–100 scale; absent when the reply
    /// omitted it.
    pub confidence: Option<u8>,
    pub justification: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drafts: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FallbackReason {
    Unparseable,
    IllegalLabel,
    ExplicitRefusal,
    BackendFailure,
}

/// A reply from which no legal verdict could be extracted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fallback {
    pub reason: FallbackReason,
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Outcome {
    Verdict(Verdict),
    Fallback(Fallback),
}

impl Outcome {
    pub fn verdict(&self) -> Option<&Verdict> {
        match self {
            Outcome::Verdict(v) => Some(v),
            Outcome::Fallback(_) => None,
        }
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self, Outcome::Fallback(_))
    }

    pub fn backend_failure(message: impl Into<String>) -> Outcome {
        Outcome::Fallback(Fallback { reason: FallbackReason::BackendFailure, raw_text: message.into() })
    }
}

const REFUSAL_PHRASES: &[&str] = &[
    "i cannot",
    "i can't",
    "i can not",
    "i am unable",
    "i'm unable",
    "unable to verify",
    "unable to determine",
    "cannot verify",
    "cannot determine",
    "i'm sorry",
    "i am sorry",
    "i will not",
    "i won't",
];

fn is_refusal(text: &str) -> bool {
    let lower = text.to_lowercase().replace('\u{2019}', "'");
    REFUSAL_PHRASES.iter().any(|p| lower.contains(p))
}

/// First JSON object in `text` that has a `label` key, scanning every `{`.
fn find_label_object(text: &str) -> Option<Map<String, Value>> {
    text.match_indices('{').find_map(|(i, _)| {
        let mut de = serde_json::Deserializer::from_str(&text[i..]);
        match Value::deserialize(&mut de) {
            Ok(Value::Object(map)) if map.contains_key("label") => Some(map),
            _ => None,
        }
    })
}

enum Confidence {
    Absent,
    Valid(u8),
    Invalid,
}

fn read_confidence(value: Option<&Value>) -> Confidence {
    let in_range = |x: i64| u8::try_from(x).ok().filter(|&c| c <= 100);
    let parsed = match value {
        None | Some(Value::Null) => return Confidence::Absent,
        Some(Value::Number(n)) => {
            n.as_i64().or_else(|| n.as_f64().filter(|f| f.is_finite() && *f == (*f as i64) as f64).map(|f| f as i64))
        }
        Some(Value::String(s)) => s.trim().trim_end_matches('%').trim().parse::<i64>().ok(),
        Some(_) => None,
    };
    match parsed.and_then(in_range) {
        Some(c) => Confidence::Valid(c),
        None => Confidence::Invalid,
    }
}

/// Interpret a raw reply under `scheme`. Always returns exactly one of a
/// verdict or a fallback.
pub fn parse_verdict(raw_text: &str, scheme: Scheme) -> Outcome {
    let fallback = |reason| Outcome::Fallback(Fallback { reason, raw_text: raw_text.to_string() });
    let Some(obj) = find_label_object(raw_text) else {
        return if is_refusal(raw_text) {
            fallback(FallbackReason::ExplicitRefusal)
        } else {
            fallback(FallbackReason::Unparseable)
        };
    };
    let label = match obj.get("label") {
        Some(Value::String(s)) => match Label::parse_in(s, scheme) {
            Ok(l) => l,
            Err(_) => return fallback(FallbackReason::IllegalLabel),
        },
        _ => return fallback(FallbackReason::IllegalLabel),
    };
    let confidence = match read_confidence(obj.get("confidence")) {
        Confidence::Absent => None,
        Confidence::Valid(c) => Some(c),
        Confidence::Invalid => return fallback(FallbackReason::Unparseable),
    };
    let justification = match obj.get("justification") {
        Some(Value::String(s)) => s.clone(),
        _ => String::new(),
    };
    let drafts = match obj.get("drafts") {
        Some(Value::Array(items)) => Some(
            items
                .iter()
                .map(|d| match d {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect(),
        ),
        _ => None,
    };
    Outcome::Verdict(Verdict { label, confidence, justification, drafts })
}

/// Serialize a verdict in the reply format the prompts request.
pub fn render_verdict(verdict: &Verdict) -> String {
    let mut obj = Map::new();
    if let Some(drafts) = &verdict.drafts {
        obj.insert("drafts".into(), drafts.iter().cloned().map(Value::String).collect());
    }
    obj.insert("label".into(), Value::String(verdict.label.as_str().into()));
    if let Some(c) = verdict.confidence {
        obj.insert("confidence".into(), Value::from(c));
    }
    obj.insert("justification".into(), Value::String(verdict.justification.clone()));
    Value::Object(obj).to_string()
}
