//! Test-only generators and brute-force oracles, shared by the property
//! tests and the acceptance suite. The oracles deliberately avoid the
//! library's own helpers (no confusion matrix, no `Label::project`).
#![allow(dead_code)]

use std::collections::BTreeMap;

use climcheck_core::{EvidenceBundle, EvidenceItem, Label, MatchKind, Scheme, SourceKind, SourceResult};
use proptest::prelude::*;

pub const FOUR: [Label; 4] = [Label::Accurate, Label::Misleading, Label::False, Label::Unverifiable];
pub const TWO: [Label; 2] = [Label::Accurate, Label::Disinformation];

pub fn labels_of(scheme: Scheme) -> &'static [Label] {
    match scheme {
        Scheme::FourClass => &FOUR,
        Scheme::TwoClass => &TWO,
    }
}

pub fn arb_scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![Just(Scheme::FourClass), Just(Scheme::TwoClass)]
}

pub fn arb_label(scheme: Scheme) -> impl Strategy<Value = Label> {
    proptest::sample::select(labels_of(scheme).to_vec())
}

/// `(gold, pred)` pairs, 1..=max_len of them.
pub fn arb_pairs(scheme: Scheme, max_len: usize) -> impl Strategy<Value = Vec<(Label, Label)>> {
    proptest::collection::vec((arb_label(scheme), arb_label(scheme)), 1..=max_len)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMetrics {
    pub matches: u64,
    pub n: u64,
    pub accuracy: f64,
    /// counts[gold][pred] in scheme label order.
    pub counts: Vec<Vec<u64>>,
    pub distribution: BTreeMap<Label, u64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Straight from the definitions: scan the pairs once per quantity.
pub fn oracle_metrics(scheme: Scheme, pairs: &[(Label, Label)]) -> OracleMetrics {
    let labels = labels_of(scheme);
    let n = pairs.len() as u64;
    let matches = pairs.iter().filter(|(g, p)| g == p).count() as u64;
    let counts = labels
        .iter()
        .map(|g| {
            labels.iter().map(|p| pairs.iter().filter(|pair| pair.0 == *g && pair.1 == *p).count() as u64).collect()
        })
        .collect();
    let distribution = labels.iter().map(|l| (*l, pairs.iter().filter(|(_, p)| p == l).count() as u64)).collect();
    let (mut ps, mut rs, mut fs) = (Vec::new(), Vec::new(), Vec::new());
    for l in labels {
        let tp = pairs.iter().filter(|(g, p)| g == l && p == l).count() as f64;
        let fp = pairs.iter().filter(|(g, p)| g != l && p == l).count() as f64;
        let fneg = pairs.iter().filter(|(g, p)| g == l && p != l).count() as f64;
        if tp + fp + fneg == 0.0 {
            continue;
        }
        let p = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
        let r = if tp + fneg == 0.0 { 0.0 } else { tp / (tp + fneg) };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        ps.push(p);
        rs.push(r);
        fs.push(f);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    OracleMetrics {
        matches,
        n,
        accuracy: 100.0 * matches as f64 / n as f64,
        counts,
        distribution,
        precision: mean(&ps),
        recall: mean(&rs),
        f1: mean(&fs),
    }
}

/// Label reaching `threshold` votes, if exactly one does.
pub fn oracle_vote(votes: &[Option<Label>], threshold: usize) -> Option<Label> {
    let winners: Vec<Label> = FOUR
        .iter()
        .chain(&[Label::Disinformation])
        .copied()
        .filter(|l| votes.iter().filter(|v| **v == Some(*l)).count() >= threshold)
        .collect();
    match winners.as_slice() {
        [one] => Some(*one),
        _ => None,
    }
}

/// Every vector of `len` votes over `alphabet` plus a failed ballot.
pub fn all_vote_vectors(alphabet: &[Label], len: usize, with_none: bool) -> Vec<Vec<Option<Label>>> {
    let mut symbols: Vec<Option<Label>> = alphabet.iter().map(|l| Some(*l)).collect();
    if with_none {
        symbols.push(None);
    }
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                symbols.iter().map(move |s| {
                    let mut v = prefix.clone();
                    v.push(*s);
                    v
                })
            })
            .collect();
    }
    out
}

fn arb_text(max: usize) -> impl Strategy<Value = String> {
    proptest::string::string_regex(&format!("[A-Za-z0-9 ,.'-]{{0,{max}}}")).unwrap()
}

pub fn arb_item(source: SourceKind) -> impl Strategy<Value = EvidenceItem> {
    (arb_text(60), arb_text(200), 0u32..1000, any::<bool>(), proptest::option::of(arb_text(12))).prop_map(
        move |(title, snippet, n, exact, hint)| {
            let mut item = EvidenceItem::new(title, snippet, format!("https://example.org/{n}"));
            match source {
                SourceKind::ReverseImage => {
                    item = item.with_match(if exact { MatchKind::Exact } else { MatchKind::Visual })
                }
                SourceKind::FactCheck => item.verdict_hint = hint,
                _ => {}
            }
            item
        },
    )
}

pub fn arb_result(source: SourceKind) -> impl Strategy<Value = SourceResult> {
    (proptest::collection::vec(arb_item(source), 0..=10), proptest::option::of(arb_text(80)), 0u8..10).prop_map(
        move |(mut items, about, fail)| {
            if fail == 0 {
                return SourceResult::failed(source, "timeout", "t");
            }
            if source == SourceKind::ReverseImage {
                items.sort_by_key(|i| i.match_kind);
            }
            let about = if source == SourceKind::ReverseImage { about } else { None };
            SourceResult::completed(source, items, about, "t")
        },
    )
}

/// A bundle with a random subset of sources present.
pub fn arb_bundle() -> impl Strategy<Value = EvidenceBundle> {
    let per_source = SourceKind::ALL.map(|s| proptest::option::of(arb_result(s)));
    per_source.prop_map(|results| {
        let mut b = EvidenceBundle::new("s");
        for r in results.into_iter().flatten() {
            b.insert(r);
        }
        b
    })
}

pub fn priority(source: SourceKind) -> usize {
    match source {
        SourceKind::FactCheck => 0,
        SourceKind::GptSearch => 1,
        SourceKind::ReverseImage => 2,
        SourceKind::GoogleSearch => 3,
    }
}
