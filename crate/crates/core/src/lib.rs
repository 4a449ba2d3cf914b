//! Allocation-only core of the image-claim verification pipeline.
//!
//! Everything here is pure: label taxonomies, evidence types, budgeted
//! context assembly, prompt construction, verdict parsing, ensemble voting
//! and metrics. IO, network clients and the command line live in the
//! `climcheck` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assembly;
pub mod error;
pub mod evidence;
pub mod label;
pub mod metrics;
pub mod prompt;
pub mod sample;
pub mod settings;
pub mod verdict;
pub mod vote;

pub use assembly::{assemble, estimate_tokens, render_block, AssembledContext, AssemblyPlan, ContextBlock};
pub use error::{Error, Result};
pub use evidence::{EvidenceBundle, EvidenceItem, MatchKind, SourceKind, SourceResult, SourceSet};
pub use label::{legal_labels, map_to_binary, Label, Label2, Label4, Scheme};
pub use metrics::{build_report, ConfusionMatrix, EvalReport, EvaluatedSample};
pub use prompt::{build_role_prompt, build_verdict_prompt, PromptCatalog, PromptSpec, Role};
pub use sample::Sample;
pub use settings::{AssemblyMode, Strategy};
pub use verdict::{parse_verdict, Fallback, FallbackReason, ModelResponse, Outcome, Verdict};
pub use vote::{majority_vote, Ballot, RoleVote, VoteRecord};
