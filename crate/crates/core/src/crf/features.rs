//! Orthographic, lexical and gazetteer features for the CRF.
//!
//! Feature names have the form `<kind>@<offset>[=<value>]`, e.g.
//! `word-shape@0=XXX` or `gazetteer:reagent@-1`. A template whose offset
//! falls outside the sentence emits `BOS@<offset>` or `EOS@<offset>` instead.
//! Every position also carries the `bias` feature.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::{Error, Result};

pub const MAX_OFFSET: i8 = 2;
pub const MAX_AFFIX: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateKind {
    WordLower,
    WordShape,
    Prefix(u8),
    Suffix(u8),
    IsDigit,
    IsPunct,
    IsUpper,
    ContainsDigit,
    Gazetteer,
    SentencePosition,
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateKind::WordLower => f.write_str("word-lower"),
            TemplateKind::WordShape => f.write_str("word-shape"),
            TemplateKind::Prefix(k) => write!(f, "prefix-{k}"),
            TemplateKind::Suffix(k) => write!(f, "suffix-{k}"),
            TemplateKind::IsDigit => f.write_str("is-digit"),
            TemplateKind::IsPunct => f.write_str("is-punct"),
            TemplateKind::IsUpper => f.write_str("is-upper"),
            TemplateKind::ContainsDigit => f.write_str("contains-digit"),
            TemplateKind::Gazetteer => f.write_str("gazetteer"),
            TemplateKind::SentencePosition => f.write_str("sentence-position"),
        }
    }
}

impl FromStr for TemplateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let affix = |rest: &str| -> Result<u8> {
            match rest.parse::<u8>() {
                Ok(k) if (1..=MAX_AFFIX).contains(&k) => Ok(k),
                _ => Err(Error::Config(format!("affix length in {s:?} must be 1..={MAX_AFFIX}"))),
            }
        };
        Ok(match s {
            "word-lower" => TemplateKind::WordLower,
            "word-shape" => TemplateKind::WordShape,
            "is-digit" => TemplateKind::IsDigit,
            "is-punct" => TemplateKind::IsPunct,
            "is-upper" => TemplateKind::IsUpper,
            "contains-digit" => TemplateKind::ContainsDigit,
            "gazetteer" => TemplateKind::Gazetteer,
            "sentence-position" => TemplateKind::SentencePosition,
            _ => {
                if let Some(k) = s.strip_prefix("prefix-") {
                    TemplateKind::Prefix(affix(k)?)
                } else if let Some(k) = s.strip_prefix("suffix-") {
                    TemplateKind::Suffix(affix(k)?)
                } else {
                    return Err(Error::Config(format!("unknown feature template {s:?}")));
                }
            }
        })
    }
}

/// A feature kind applied to the token at `offset` from the current position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureTemplate {
    pub kind: TemplateKind,
    pub offset: i8,
}

impl FeatureTemplate {
    pub fn new(kind: TemplateKind, offset: i8) -> Result<Self> {
        if offset.abs() > MAX_OFFSET {
            return Err(Error::Config(format!(
                "offset {offset} outside -{MAX_OFFSET}..={MAX_OFFSET}"
            )));
        }
        Ok(FeatureTemplate { kind, offset })
    }
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.kind, self.offset)
    }
}

impl FromStr for FeatureTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, offset) = s
            .rsplit_once('@')
            .ok_or_else(|| Error::Config(format!("template {s:?} lacks @offset")))?;
        let offset = offset
            .parse()
            .map_err(|_| Error::Config(format!("bad offset in template {s:?}")))?;
        FeatureTemplate::new(kind.parse()?, offset)
    }
}

impl Serialize for FeatureTemplate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureTemplate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// The default template inventory: lowercased words over a ±2 window, word
/// shape over ±1, affixes 1-4, digit/punctuation/case flags, gazetteer
/// membership over ±1 and sentence position.
pub fn default_templates() -> Vec<FeatureTemplate> {
    let mut out = Vec::new();
    let mut add = |kind, offsets: &[i8]| {
        for &o in offsets {
            out.push(FeatureTemplate { kind, offset: o });
        }
    };
    add(TemplateKind::WordLower, &[-2, -1, 0, 1, 2]);
    add(TemplateKind::WordShape, &[-1, 0, 1]);
    for k in 1..=MAX_AFFIX {
        add(TemplateKind::Prefix(k), &[0]);
        add(TemplateKind::Suffix(k), &[0]);
    }
    add(TemplateKind::IsDigit, &[0]);
    add(TemplateKind::IsPunct, &[0]);
    add(TemplateKind::IsUpper, &[0]);
    add(TemplateKind::ContainsDigit, &[-1, 0, 1]);
    add(TemplateKind::Gazetteer, &[-1, 0, 1]);
    add(TemplateKind::SentencePosition, &[0]);
    out
}

/// Reads a template config. Each non-comment line is a kind followed by
/// offsets (integers or inclusive ranges `a..b`, space or comma separated);
/// a bare kind means offset 0.
///
/// ```text
/// word-lower -2..2
/// prefix-3 0
/// gazetteer -1, 0, 1
/// ```
pub fn parse_templates<R: BufRead>(reader: R) -> Result<Vec<FeatureTemplate>> {
    let mut out = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::Config(format!("template line {}: {m}", i + 1));
        let mut parts = line.split(|c: char| c.is_whitespace() || c == ',').filter(|p| !p.is_empty());
        let kind: TemplateKind = parts.next().unwrap().parse().map_err(|e: Error| err(e.to_string()))?;
        let mut offsets = Vec::new();
        for p in parts {
            if let Some((a, b)) = p.split_once("..") {
                let a: i8 = a.parse().map_err(|_| err(format!("bad range {p:?}")))?;
                let b: i8 = b.parse().map_err(|_| err(format!("bad range {p:?}")))?;
                offsets.extend(a..=b);
            } else {
                offsets.push(p.parse().map_err(|_| err(format!("bad offset {p:?}")))?);
            }
        }
        if offsets.is_empty() {
            offsets.push(0);
        }
        for o in offsets {
            out.insert(FeatureTemplate::new(kind, o).map_err(|e| err(e.to_string()))?);
        }
    }
    Ok(out.into_iter().collect())
}

/// A named lexicon. Entries are lowercased and whitespace-normalized; an entry
/// of several words matches the same sequence of consecutive tokens.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gazetteer {
    pub name: String,
    entries: BTreeSet<String>,
    #[serde(skip)]
    max_words: usize,
}

fn normalize_entry(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

impl Gazetteer {
    pub fn new<I, S>(name: impl Into<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.into();
        let entries: BTreeSet<String> = entries
            .into_iter()
            .map(|e| normalize_entry(e.as_ref()))
            .filter(|e| !e.is_empty())
            .collect();
        if entries.is_empty() {
            return Err(Error::Config(format!("gazetteer {name:?} has no entries")));
        }
        if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == '@') {
            return Err(Error::Config(format!("invalid gazetteer name {name:?}")));
        }
        let mut g = Gazetteer {
            name,
            entries,
            max_words: 0,
        };
        g.refresh();
        Ok(g)
    }

    /// Reads one entry per line.
    pub fn read<R: BufRead>(name: impl Into<String>, reader: R) -> Result<Self> {
        let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
        Gazetteer::new(name, lines)
    }

    pub(crate) fn refresh(&mut self) {
        self.max_words = self
            .entries
            .iter()
            .map(|e| e.split(' ').count())
            .max()
            .unwrap_or(0);
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.entries.contains(&normalize_entry(phrase))
    }

    pub fn entries(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Marks every token covered by an entry occurrence.
    fn hits(&self, lowered: &[String]) -> Vec<bool> {
        let n = lowered.len();
        let mut hit = vec![false; n];
        let mut phrase = String::new();
        for start in 0..n {
            phrase.clear();
            for len in 1..=self.max_words.min(n - start) {
                if len > 1 {
                    phrase.push(' ');
                }
                phrase.push_str(&lowered[start + len - 1]);
                if self.entries.contains(&phrase) {
                    hit[start..start + len].iter_mut().for_each(|h| *h = true);
                }
            }
        }
        hit
    }
}

fn word_shape(word: &str) -> String {
    word.chars()
        .map(|c| {
            if c.is_uppercase() {
                'X'
            } else if c.is_lowercase() {
                'x'
            } else if c.is_numeric() {
                'd'
            } else {
                c
            }
        })
        .collect()
}

fn is_punct_word(word: &str) -> bool {
    word.chars().all(|c| !c.is_alphanumeric())
}

fn is_upper_word(word: &str) -> bool {
    word.chars().any(char::is_alphabetic) && !word.chars().any(char::is_lowercase)
}

/// Turns sentences into per-position feature names.
#[derive(Clone, Copy, Debug)]
pub struct FeatureExtractor<'a> {
    pub templates: &'a [FeatureTemplate],
    pub gazetteers: &'a [Gazetteer],
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(templates: &'a [FeatureTemplate], gazetteers: &'a [Gazetteer]) -> Self {
        FeatureExtractor {
            templates,
            gazetteers,
        }
    }

    /// Features for one position.
    pub fn extract(&self, sentence: &Sentence, position: usize) -> Vec<String> {
        let lowered = lowered(sentence);
        let hits = self.gazetteer_hits(&lowered);
        self.extract_with(sentence, &lowered, &hits, position)
    }

    /// Features for every position of the sentence.
    pub fn extract_all(&self, sentence: &Sentence) -> Vec<Vec<String>> {
        let lowered = lowered(sentence);
        let hits = self.gazetteer_hits(&lowered);
        (0..sentence.len())
            .map(|i| self.extract_with(sentence, &lowered, &hits, i))
            .collect()
    }

    fn gazetteer_hits(&self, lowered: &[String]) -> Vec<Vec<bool>> {
        let uses_gazetteers = self
            .templates
            .iter()
            .any(|t| t.kind == TemplateKind::Gazetteer);
        if !uses_gazetteers {
            return Vec::new();
        }
        self.gazetteers.iter().map(|g| g.hits(lowered)).collect()
    }

    fn extract_with(
        &self,
        sentence: &Sentence,
        lowered: &[String],
        hits: &[Vec<bool>],
        position: usize,
    ) -> Vec<String> {
        let n = sentence.len() as isize;
        let mut out = vec!["bias".to_string()];
        for t in self.templates {
            let j = position as isize + t.offset as isize;
            let at = t.offset;
            if j < 0 {
                out.push(format!("BOS@{at}"));
                continue;
            }
            if j >= n {
                out.push(format!("EOS@{at}"));
                continue;
            }
            let j = j as usize;
            let word = sentence.tokens[j].text.as_str();
            match t.kind {
                TemplateKind::WordLower => out.push(format!("{}@{at}={}", t.kind, lowered[j])),
                TemplateKind::WordShape => out.push(format!("{}@{at}={}", t.kind, word_shape(word))),
                TemplateKind::Prefix(k) => {
                    let chars: Vec<char> = word.chars().collect();
                    if chars.len() >= k as usize {
                        let p: String = chars[..k as usize].iter().collect();
                        out.push(format!("{}@{at}={p}", t.kind));
                    }
                }
                TemplateKind::Suffix(k) => {
                    let chars: Vec<char> = word.chars().collect();
                    if chars.len() >= k as usize {
                        let s: String = chars[chars.len() - k as usize..].iter().collect();
                        out.push(format!("{}@{at}={s}", t.kind));
                    }
                }
                TemplateKind::IsDigit => {
                    if word.chars().all(|c| c.is_ascii_digit()) {
                        out.push(format!("{}@{at}", t.kind));
                    }
                }
                TemplateKind::IsPunct => {
                    if is_punct_word(word) {
                        out.push(format!("{}@{at}", t.kind));
                    }
                }
                TemplateKind::IsUpper => {
                    if is_upper_word(word) {
                        out.push(format!("{}@{at}", t.kind));
                    }
                }
                TemplateKind::ContainsDigit => {
                    if word.chars().any(|c| c.is_ascii_digit()) {
                        out.push(format!("{}@{at}", t.kind));
                    }
                }
                TemplateKind::Gazetteer => {
                    for (g, hit) in self.gazetteers.iter().zip(hits) {
                        if hit[j] {
                            out.push(format!("gazetteer:{}@{at}", g.name));
                        }
                    }
                }
                TemplateKind::SentencePosition => {
                    if j == 0 {
                        out.push(format!("{}@{at}=first", t.kind));
                    }
                    if j as isize == n - 1 {
                        out.push(format!("{}@{at}=last", t.kind));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn lowered(sentence: &Sentence) -> Vec<String> {
    sentence.words().map(str::to_lowercase).collect()
}
