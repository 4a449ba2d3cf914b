use core::fmt;

use serde::{Deserialize, Serialize};

/// Reasoning strategy requested from the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Chain-of-Thought: step-by-step reasoning before the verdict.
    #[serde(rename = "cot", alias = "CoT")]
    ChainOfThought,
    /// Chain-of-Draft: a few short candidate readings, then a selection.
    #[serde(rename = "cod", alias = "CoD")]
    ChainOfDraft,
}

impl Strategy {
    pub fn tag(self) -> &'static str {
        match self {
            Strategy::ChainOfThought => "cot",
            Strategy::ChainOfDraft => "cod",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Strategy::ChainOfThought => "CoT",
            Strategy::ChainOfDraft => "CoD",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// How retrieved evidence is packed into the prompt.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssemblyMode {
    /// Priority-ordered inclusion that stops at the first source that
    /// overflows the budget.
    #[default]
    Conditional,
    /// Every successful source, trimmed from the lowest priority upward.
    Concat,
}

pub const MIN_TOKEN_BUDGET: usize = 256;
pub const DEFAULT_TOKEN_BUDGET: usize = 6_000;
