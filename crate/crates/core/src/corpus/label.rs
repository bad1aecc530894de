use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Document;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    B,
    I,
}

/// A word-level BIO tag. Displays and parses as `O`, `B-<type>` or `I-<type>`;
/// the type is everything after the first `-`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BioTag {
    O,
    Entity { scheme: Scheme, label: String },
}

impl BioTag {
    pub fn begin(label: impl Into<String>) -> Self {
        BioTag::Entity {
            scheme: Scheme::B,
            label: label.into(),
        }
    }

    pub fn inside(label: impl Into<String>) -> Self {
        BioTag::Entity {
            scheme: Scheme::I,
            label: label.into(),
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            BioTag::O => None,
            BioTag::Entity { label, .. } => Some(label),
        }
    }

    pub fn scheme(&self) -> Option<Scheme> {
        match self {
            BioTag::O => None,
            BioTag::Entity { scheme, .. } => Some(*scheme),
        }
    }

    pub fn is_begin(&self) -> bool {
        self.scheme() == Some(Scheme::B)
    }

    pub fn is_inside(&self) -> bool {
        self.scheme() == Some(Scheme::I)
    }

    /// Whether `self` may directly follow `previous` (`None` = sentence start).
    pub fn may_follow(&self, previous: Option<&BioTag>) -> bool {
        match self {
            BioTag::Entity {
                scheme: Scheme::I,
                label,
            } => previous.and_then(BioTag::label) == Some(label.as_str()),
            _ => true,
        }
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::O => f.write_str("O"),
            BioTag::Entity { scheme, label } => {
                let prefix = match scheme {
                    Scheme::B => "B",
                    Scheme::I => "I",
                };
                write!(f, "{prefix}-{label}")
            }
        }
    }
}

impl FromStr for BioTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(BioTag::O);
        }
        let scheme = match s.split_once('-') {
            Some(("B", rest)) if !rest.is_empty() => Scheme::B,
            Some(("I", rest)) if !rest.is_empty() => Scheme::I,
            _ => return Err(Error::InvalidTag(s.to_string())),
        };
        Ok(BioTag::Entity {
            scheme,
            label: s[2..].to_string(),
        })
    }
}

impl Serialize for BioTag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioTag {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered entity-type inventory. The tag alphabet is `O` followed by
/// `B-t, I-t` for each type `t` in order, so it has `2 * types + 1` tags.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelSet {
    types: Vec<String>,
}

impl LabelSet {
    pub fn new<I, S>(types: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let types: Vec<String> = types.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for t in &types {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::LabelSet(format!("invalid entity type {t:?}")));
            }
            if t == "O" {
                return Err(Error::LabelSet("entity type may not be named O".into()));
            }
            if !seen.insert(t.as_str()) {
                return Err(Error::LabelSet(format!("duplicate entity type {t:?}")));
            }
        }
        Ok(LabelSet { types })
    }

    /// Reads a label-set config file: one entity type per line, blank lines
    /// and `#` comments ignored.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut types = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            types.push(line.to_string());
        }
        LabelSet::new(types)
    }

    /// Types in order of first occurrence across all tagged sentences.
    pub fn infer(documents: &[Document]) -> Self {
        let mut types: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        let tags = documents
            .iter()
            .flat_map(|d| &d.sentences)
            .filter_map(|s| s.tags.as_ref())
            .flatten();
        for tag in tags {
            if let Some(label) = tag.label() {
                if seen.insert(label.to_string()) {
                    types.push(label.to_string());
                }
            }
        }
        LabelSet { types }
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn contains_type(&self, t: &str) -> bool {
        self.types.iter().any(|x| x == t)
    }

    pub fn alphabet(&self) -> Vec<BioTag> {
        let mut tags = Vec::with_capacity(self.tag_count());
        tags.push(BioTag::O);
        for t in &self.types {
            tags.push(BioTag::begin(t.clone()));
            tags.push(BioTag::inside(t.clone()));
        }
        tags
    }

    pub fn tag_count(&self) -> usize {
        2 * self.types.len() + 1
    }

    /// Position of `tag` in [`LabelSet::alphabet`].
    pub fn index_of(&self, tag: &BioTag) -> Option<usize> {
        match tag {
            BioTag::O => Some(0),
            BioTag::Entity { scheme, label } => {
                let t = self.types.iter().position(|x| x == label)?;
                Some(1 + 2 * t + usize::from(*scheme == Scheme::I))
            }
        }
    }

    /// Adds types not yet present, keeping existing order.
    pub fn extend_with(&mut self, other: &LabelSet) {
        for t in &other.types {
            if !self.contains_type(t) {
                self.types.push(t.clone());
            }
        }
    }

    pub fn write(&self) -> String {
        self.types.iter().map(|t| format!("{t}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tags_on_first_dash() {
        assert_eq!("O".parse::<BioTag>().unwrap(), BioTag::O);
        assert_eq!("B-Reagent".parse::<BioTag>().unwrap(), BioTag::begin("Reagent"));
        assert_eq!("I-Mod-Type".parse::<BioTag>().unwrap(), BioTag::inside("Mod-Type"));
        for bad in ["", "B", "B-", "X-Reagent", "o", "BReagent"] {
            assert!(bad.parse::<BioTag>().is_err(), "{bad}");
        }
        assert_eq!(BioTag::inside("Mod-Type").to_string(), "I-Mod-Type");
    }

    #[test]
    fn alphabet_order() {
        let ls = LabelSet::new(["Reagent", "Method"]).unwrap();
        let names: Vec<String> = ls.alphabet().iter().map(ToString::to_string).collect();
        assert_eq!(names, ["O", "B-Reagent", "I-Reagent", "B-Method", "I-Method"]);
        for (i, tag) in ls.alphabet().iter().enumerate() {
            assert_eq!(ls.index_of(tag), Some(i));
        }
        assert_eq!(ls.index_of(&BioTag::begin("Device")), None);
    }

    #[test]
    fn rejects_bad_types() {
        assert!(LabelSet::new(["O"]).is_err());
        assert!(LabelSet::new(["A", "A"]).is_err());
        assert!(LabelSet::new([""]).is_err());
        let ls = LabelSet::read("# types\nReagent\n\nDevice\n".as_bytes()).unwrap();
        assert_eq!(ls.types(), ["Reagent", "Device"]);
    }
}
