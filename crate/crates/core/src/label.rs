//! Factuality label taxonomies.
//!
//! Two schemes are in use: a four-class scheme (`Accurate`, `Misleading`,
//! `False`, `Unverifiable`) and a binary one (`Accurate`, `Disinformation`).
//! [`Label`] is the flat union of both spellings; [`Scheme`] decides which
//! of them are legal in a given run.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Four-class factuality label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label4 {
    Accurate,
    Misleading,
    False,
    Unverifiable,
}

/// Binary factuality label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label2 {
    Accurate,
    Disinformation,
}

impl Label4 {
    pub const ALL: [Label4; 4] = [Label4::Accurate, Label4::Misleading, Label4::False, Label4::Unverifiable];
}

impl Label2 {
    pub const ALL: [Label2; 2] = [Label2::Accurate, Label2::Disinformation];
}

/// Collapse a four-class label into the binary scheme.
///
/// Only `Accurate` stays `Accurate`; every other class is `Disinformation`.
pub fn map_to_binary(label: Label4) -> Label2 {
    match label {
        Label4::Accurate => Label2::Accurate,
        Label4::Misleading | Label4::False | Label4::Unverifiable => Label2::Disinformation,
    }
}

/// Any label spelling from either scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Accurate,
    Misleading,
    False,
    Unverifiable,
    Disinformation,
}

impl Label {
    pub const ALL: [Label; 5] =
        [Label::Accurate, Label::Misleading, Label::False, Label::Unverifiable, Label::Disinformation];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Accurate => "Accurate",
            Label::Misleading => "Misleading",
            Label::False => "False",
            Label::Unverifiable => "Unverifiable",
            Label::Disinformation => "Disinformation",
        }
    }

    /// Case-insensitive parse over all five spellings. Surrounding
    /// whitespace is ignored.
    pub fn parse(s: &str) -> Result<Label, Error> {
        let t = s.trim();
        Label::ALL.into_iter().find(|l| l.as_str().eq_ignore_ascii_case(t)).ok_or_else(|| Error::UnknownLabel(t.into()))
    }

    /// Parse and require membership in `scheme`.
    pub fn parse_in(s: &str, scheme: Scheme) -> Result<Label, Error> {
        let label = Label::parse(s)?;
        if scheme.contains(label) {
            Ok(label)
        } else {
            Err(Error::UnknownLabel(s.trim().into()))
        }
    }

    /// Express this label in `scheme`, if possible.
    ///
    /// Four-class labels project onto the binary scheme through
    /// [`map_to_binary`]; `Disinformation` has no four-class counterpart.
    pub fn project(self, scheme: Scheme) -> Option<Label> {
        match scheme {
            Scheme::FourClass => self.as_label4().map(Label::from),
            Scheme::TwoClass => match self {
                Label::Disinformation => Some(Label::Disinformation),
                other => other.as_label4().map(|l| map_to_binary(l).into()),
            },
        }
    }

    pub fn as_label4(self) -> Option<Label4> {
        match self {
            Label::Accurate => Some(Label4::Accurate),
            Label::Misleading => Some(Label4::Misleading),
            Label::False => Some(Label4::False),
            Label::Unverifiable => Some(Label4::Unverifiable),
            Label::Disinformation => None,
        }
    }

    pub fn as_label2(self) -> Option<Label2> {
        match self {
            Label::Accurate => Some(Label2::Accurate),
            Label::Disinformation => Some(Label2::Disinformation),
            _ => None,
        }
    }
}

impl From<Label4> for Label {
    fn from(l: Label4) -> Self {
        match l {
            Label4::Accurate => Label::Accurate,
            Label4::Misleading => Label::Misleading,
            Label4::False => Label::False,
            Label4::Unverifiable => Label::Unverifiable,
        }
    }
}

impl From<Label2> for Label {
    fn from(l: Label2) -> Self {
        match l {
            Label2::Accurate => Label::Accurate,
            Label2::Disinformation => Label::Disinformation,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::parse(s)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        Label::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// The label taxonomy in force for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "4class", alias = "FourClass", alias = "four_class")]
    FourClass,
    #[serde(rename = "2class", alias = "TwoClass", alias = "two_class")]
    TwoClass,
}

const FOUR: [Label; 4] = [Label::Accurate, Label::Misleading, Label::False, Label::Unverifiable];
const TWO: [Label; 2] = [Label::Accurate, Label::Disinformation];

impl Scheme {
    /// Legal labels in canonical order.
    pub fn labels(self) -> &'static [Label] {
        match self {
            Scheme::FourClass => &FOUR,
            Scheme::TwoClass => &TWO,
        }
    }

    pub fn contains(self, label: Label) -> bool {
        self.labels().contains(&label)
    }

    /// Position of `label` in [`Scheme::labels`].
    pub fn index_of(self, label: Label) -> Option<usize> {
        self.labels().iter().position(|&l| l == label)
    }

    /// Short tag used in run ids and template ids.
    pub fn tag(self) -> &'static str {
        match self {
            Scheme::FourClass => "4class",
            Scheme::TwoClass => "2class",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Canonical spellings legal under `scheme`.
pub fn legal_labels(scheme: Scheme) -> impl Iterator<Item = &'static str> {
    scheme.labels().iter().map(|l| l.as_str())
}
