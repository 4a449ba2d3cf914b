//! Ensemble labeling: several role prompts per sample, majority vote.

use std::path::Path;

use climcheck_core::vote::threshold;
use climcheck_core::{build_role_prompt, Ballot, Outcome, PromptCatalog, Role, RoleVote, Sample, Scheme, VoteRecord};
use serde::{Deserialize, Serialize};

use crate::error::RunError;
use crate::inference::{self, Backend};
use crate::manifest::{write_jsonl, Manifest};
use crate::pool::for_each_bounded;
use crate::retry::RetryPolicy;

pub const LABELED_FILE: &str = "labeled.jsonl";
pub const VOTES_FILE: &str = "votes.jsonl";
pub const UNDECIDED_FILE: &str = "undecided.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Undecided {
    pub sample_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Annotation {
    /// Samples with a decided label in `gold`, manifest order.
    pub labeled: Vec<Sample>,
    pub votes: Vec<VoteRecord>,
    pub undecided: Vec<Undecided>,
}

pub struct Annotator<'a> {
    pub backend: &'a dyn Backend,
    pub catalog: &'a PromptCatalog,
    pub retry: RetryPolicy,
    pub temperature: f64,
    pub concurrency_limit: usize,
}

enum SampleResult {
    Voted(VoteRecord),
    Skipped(String),
}

impl Annotator<'_> {
    fn ballot(&self, manifest: &Manifest, sample: &Sample, role: Role, scheme: Scheme) -> Result<Ballot, RunError> {
        let prompt = build_role_prompt(self.catalog, sample, role, scheme)?;
        let completion = inference::complete(
            self.backend,
            &prompt,
            &manifest.base_dir,
            &sample.id,
            "",
            self.temperature,
            &self.retry,
        )?;
        Ok(match completion.outcome(scheme) {
            Outcome::Verdict(v) => Ballot::Label { label: v.label },
            Outcome::Fallback(f) => Ballot::Fallback { reason: f.reason },
        })
    }

    fn vote(&self, manifest: &Manifest, sample: &Sample, scheme: Scheme) -> Result<SampleResult, RunError> {
        if scheme == Scheme::TwoClass && !sample.has_description() {
            return Ok(SampleResult::Skipped("missing description required by the binary role set".into()));
        }
        let votes = Role::for_scheme(scheme)
            .iter()
            .map(|&role| Ok(RoleVote { role, ballot: self.ballot(manifest, sample, role, scheme)? }))
            .collect::<Result<Vec<_>, RunError>>()?;
        Ok(SampleResult::Voted(VoteRecord::tally(sample.id.clone(), votes, scheme)))
    }

    /// Label every manifest sample. Samples whose votes do not reach the
    /// scheme's threshold are reported as undecided.
    pub fn annotate(&self, manifest: &Manifest, scheme: Scheme) -> Result<Annotation, RunError> {
        let mut results: Vec<Option<SampleResult>> = (0..manifest.len()).map(|_| None).collect();
        let mut failure = None;
        for_each_bounded(
            &manifest.samples,
            self.concurrency_limit,
            |s| self.vote(manifest, s, scheme),
            |i, r| match r {
                Ok(r) => {
                    results[i] = Some(r);
                    true
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    false
                }
            },
        );
        if let Some(e) = failure {
            return Err(e);
        }

        let need = threshold(scheme);
        let roles = Role::for_scheme(scheme).len();
        let mut out = Annotation::default();
        for (sample, result) in manifest.samples.iter().zip(results) {
            match result.expect("every sample is processed") {
                SampleResult::Skipped(reason) => out.undecided.push(Undecided { sample_id: sample.id.clone(), reason }),
                SampleResult::Voted(record) => {
                    match record.decided {
                        Some(label) => out.labeled.push(Sample { gold: Some(label), ..sample.clone() }),
                        None => out.undecided.push(Undecided {
                            sample_id: sample.id.clone(),
                            reason: format!("no label reached {need} of {roles} votes (best {})", record.agreement),
                        }),
                    }
                    out.votes.push(record);
                }
            }
        }
        Ok(out)
    }
}

impl Annotation {
    pub fn write(&self, dir: &Path) -> Result<(), RunError> {
        write_jsonl(&dir.join(LABELED_FILE), &self.labeled)?;
        write_jsonl(&dir.join(VOTES_FILE), &self.votes)?;
        write_jsonl(&dir.join(UNDECIDED_FILE), &self.undecided)
    }
}
