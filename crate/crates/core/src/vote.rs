//! Ensemble label voting.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::label::{Label, Scheme};
use crate::prompt::Role;
use crate::verdict::FallbackReason;

/// Agreement needed to assign a gold label: 3 of 4 roles in the four-class
/// scheme, 4 of 5 in the binary one.
pub fn threshold(scheme: Scheme) -> usize {
    match scheme {
        Scheme::FourClass => 3,
        Scheme::TwoClass => 4,
    }
}

/// Returns the label backed by at least `threshold` votes. `None` entries
/// (failed ballots) count for nothing. When several labels clear a low
/// threshold, the strictly most frequent wins and a tie yields `None`.
pub fn majority_vote(votes: &[Option<Label>], threshold: usize) -> Option<Label> {
    let mut counts: Vec<(Label, usize)> = Vec::new();
    for label in votes.iter().flatten() {
        match counts.iter_mut().find(|(l, _)| l == label) {
            Some((_, n)) => *n += 1,
            None => counts.push((*label, 1)),
        }
    }
    let best = counts.iter().map(|&(_, n)| n).max()?;
    let mut leaders = counts.iter().filter(|&&(_, n)| n == best);
    let (label, n) = *leaders.next()?;
    (leaders.next().is_none() && n >= threshold.max(1)).then_some(label)
}

/// One role's answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Ballot {
    Label { label: Label },
    Fallback { reason: FallbackReason },
}

impl Ballot {
    pub fn label(self) -> Option<Label> {
        match self {
            Ballot::Label { label } => Some(label),
            Ballot::Fallback { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleVote {
    pub role: Role,
    #[serde(flatten)]
    pub ballot: Ballot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub sample_id: String,
    pub votes: Vec<RoleVote>,
    pub decided: Option<Label>,
    /// Votes cast for the most frequent label.
    pub agreement: usize,
}

impl VoteRecord {
    pub fn tally(sample_id: impl Into<String>, votes: Vec<RoleVote>, scheme: Scheme) -> Self {
        let labels: Vec<Option<Label>> = votes.iter().map(|v| v.ballot.label()).collect();
        let decided = majority_vote(&labels, threshold(scheme));
        let agreement =
            scheme.labels().iter().map(|l| labels.iter().filter(|v| **v == Some(*l)).count()).max().unwrap_or(0);
        VoteRecord { sample_id: sample_id.into(), votes, decided, agreement }
    }
}
