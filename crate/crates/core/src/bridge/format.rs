use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::corpus::BioTag;
use crate::{Error, Result};

pub const BRIDGE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct BridgeHeader {
    pub version: u32,
    pub alphabet: Vec<BioTag>,
    /// Vocabulary identifier, see [`crate::subword::Vocabulary::fingerprint`].
    pub vocab: String,
    /// Chunk budget the exporter used.
    pub budget: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogitsRecord {
    pub document: String,
    pub sentence: usize,
    pub piece: usize,
    pub surface: String,
    pub word_index: usize,
    pub scores: Vec<f64>,
}

/// All records of one sentence, in piece order.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceScores {
    pub document: String,
    pub sentence: usize,
    pub records: Vec<LogitsRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BridgeFile {
    pub header: BridgeHeader,
    pub sentences: Vec<SentenceScores>,
    index: HashMap<(String, usize), usize>,
}

impl BridgeFile {
    /// Builds a file from groups, validating the same invariants as [`read_bridge`].
    pub fn new(header: BridgeHeader, sentences: Vec<SentenceScores>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, s) in sentences.iter().enumerate() {
            validate_group(&header, s)?;
            if index.insert((s.document.clone(), s.sentence), i).is_some() {
                return Err(Error::Bridge(format!(
                    "document {:?}, sentence {}: records are not contiguous",
                    s.document, s.sentence
                )));
            }
        }
        Ok(BridgeFile {
            header,
            sentences,
            index,
        })
    }

    pub fn get(&self, document: &str, sentence: usize) -> Option<&SentenceScores> {
        self.index
            .get(&(document.to_string(), sentence))
            .map(|&i| &self.sentences[i])
    }

    pub fn record_count(&self) -> usize {
        self.sentences.iter().map(|s| s.records.len()).sum()
    }
}

fn validate_group(header: &BridgeHeader, group: &SentenceScores) -> Result<()> {
    let at = |r: &LogitsRecord| format!("document {:?}, sentence {}, piece {}", r.document, r.sentence, r.piece);
    let mut last_word: Option<usize> = None;
    for (expected, r) in group.records.iter().enumerate() {
        if r.document != group.document || r.sentence != group.sentence {
            return Err(Error::Bridge(format!("{}: record filed under the wrong sentence", at(r))));
        }
        if r.piece != expected {
            return Err(Error::Bridge(format!(
                "{}: gap in piece indices, expected piece {expected}",
                at(r)
            )));
        }
        if r.scores.len() != header.alphabet.len() {
            return Err(Error::Bridge(format!(
                "{}: {} scores for an alphabet of {}",
                at(r),
                r.scores.len(),
                header.alphabet.len()
            )));
        }
        if r.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Bridge(format!("{}: non-finite score", at(r))));
        }
        let ok = match last_word {
            None => r.word_index == 0,
            Some(w) => r.word_index == w || r.word_index == w + 1,
        };
        if !ok {
            return Err(Error::Bridge(format!(
                "{}: word index {} breaks the alignment",
                at(r),
                r.word_index
            )));
        }
        last_word = Some(r.word_index);
    }
    Ok(())
}

fn alphabet_line(alphabet: &[BioTag]) -> String {
    alphabet.iter().map(ToString::to_string).collect::<Vec<_>>().join("\t")
}

/// Reads a bridge file and checks its alphabet against the consumer's,
/// order included.
pub fn read_bridge<R: BufRead>(source: R, expected_alphabet: &[BioTag]) -> Result<BridgeFile> {
    let mut version = None;
    let mut alphabet: Option<Vec<BioTag>> = None;
    let mut vocab = None;
    let mut budget = None;
    let mut header: Option<BridgeHeader> = None;
    let mut groups: Vec<SentenceScores> = Vec::new();

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let err = |m: String| Error::Bridge(format!("line {line_no}: {m}"));
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if header.is_some() {
                return Err(err("header line after the first record".into()));
            }
            let (key, value) = rest
                .split_once([' ', '\t'])
                .ok_or_else(|| err(format!("malformed header line {line:?}")))?;
            match key {
                "version" => {
                    let v: u32 = value.trim().parse().map_err(|_| err("bad version".into()))?;
                    if v != BRIDGE_VERSION {
                        return Err(err(format!(
                            "unsupported bridge version {v} (this build reads {BRIDGE_VERSION})"
                        )));
                    }
                    version = Some(v);
                }
                "alphabet" => {
                    let tags = value
                        .split_whitespace()
                        .map(|t| t.parse::<BioTag>())
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| err(e.to_string()))?;
                    alphabet = Some(tags);
                }
                "vocab" => vocab = Some(value.trim().to_string()),
                "budget" => {
                    budget = Some(value.trim().parse().map_err(|_| err("bad budget".into()))?)
                }
                other => return Err(err(format!("unknown header field {other:?}"))),
            }
            continue;
        }

        if header.is_none() {
            let h = BridgeHeader {
                version: version.ok_or_else(|| err("missing #version header".into()))?,
                alphabet: alphabet.take().ok_or_else(|| err("missing #alphabet header".into()))?,
                vocab: vocab.take().ok_or_else(|| err("missing #vocab header".into()))?,
                budget: budget.ok_or_else(|| err("missing #budget header".into()))?,
            };
            check_alphabet(&h.alphabet, expected_alphabet)?;
            header = Some(h);
        }

        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 tab-separated fields, found {}", fields.len())));
        }
        let number = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| err(format!("bad {what} {s:?}")))
        };
        let scores = fields[5]
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| err(format!("bad score {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let record = LogitsRecord {
            document: fields[0].to_string(),
            sentence: number(fields[1], "sentence index")?,
            piece: number(fields[2], "piece index")?,
            surface: fields[3].to_string(),
            word_index: number(fields[4], "word index")?,
            scores,
        };
        match groups.last_mut() {
            Some(g) if g.document == record.document && g.sentence == record.sentence => {
                g.records.push(record)
            }
            _ => groups.push(SentenceScores {
                document: record.document.clone(),
                sentence: record.sentence,
                records: vec![record],
            }),
        }
    }

    let header = match header {
        Some(h) => h,
        None => {
            let h = BridgeHeader {
                version: version.ok_or_else(|| Error::Bridge("missing #version header".into()))?,
                alphabet: alphabet.ok_or_else(|| Error::Bridge("missing #alphabet header".into()))?,
                vocab: vocab.ok_or_else(|| Error::Bridge("missing #vocab header".into()))?,
                budget: budget.ok_or_else(|| Error::Bridge("missing #budget header".into()))?,
            };
            check_alphabet(&h.alphabet, expected_alphabet)?;
            h
        }
    };
    BridgeFile::new(header, groups)
}

fn check_alphabet(found: &[BioTag], expected: &[BioTag]) -> Result<()> {
    if found != expected {
        return Err(Error::Bridge(format!(
            "tag alphabet mismatch: file has [{}], consumer expects [{}]",
            alphabet_line(found).replace('\t', " "),
            alphabet_line(expected).replace('\t', " ")
        )));
    }
    Ok(())
}

/// Serializes a bridge file in the wire format.
pub fn write_bridge(file: &BridgeFile) -> String {
    let h = &file.header;
    let mut out = String::new();
    writeln!(out, "#version {}", h.version).unwrap();
    writeln!(out, "#alphabet\t{}", alphabet_line(&h.alphabet)).unwrap();
    writeln!(out, "#vocab {}", h.vocab).unwrap();
    writeln!(out, "#budget {}", h.budget).unwrap();
    for r in file.sentences.iter().flat_map(|s| &s.records) {
        let scores: Vec<String> = r.scores.iter().map(|v| v.to_string()).collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.document,
            r.sentence,
            r.piece,
            r.surface,
            r.word_index,
            scores.join(" ")
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alphabet() -> Vec<BioTag> {
        ["O", "B-X", "I-X"].iter().map(|t| t.parse().unwrap()).collect()
    }

    const MINIMAL: &str = "#version 1\n#alphabet\tO\tB-X\tI-X\n#vocab v1\n#budget 512\n\
d\t0\t0\tadd\t0\t1 0 0\n\
d\t0\t1\tsds\t1\t0 1 0\n\
d\t0\t2\tnow\t2\t0.5 -1e-3 2\n";

    #[test]
    fn minimal_file() {
        let f = read_bridge(MINIMAL.as_bytes(), &alphabet()).unwrap();
        assert_eq!(f.sentences.len(), 1);
        assert_eq!(f.record_count(), 3);
        assert_eq!(f.header.budget, 512);
        assert_eq!(f.get("d", 0).unwrap().records[2].scores, [0.5, -1e-3, 2.0]);
        assert_eq!(write_bridge(&f).replace("0.5 -0.001 2", "0.5 -1e-3 2"), MINIMAL);
    }

    #[test]
    fn alphabet_order_matters() {
        let mut reordered = alphabet();
        reordered.swap(1, 2);
        let err = read_bridge(MINIMAL.as_bytes(), &reordered).unwrap_err().to_string();
        assert!(err.contains("O B-X I-X") && err.contains("O I-X B-X"), "{err}");
    }

    #[test]
    fn gaps_and_bad_records() {
        let gap = MINIMAL.replace("d\t0\t1\tsds", "d\t0\t3\tsds");
        let err = read_bridge(gap.as_bytes(), &alphabet()).unwrap_err().to_string();
        assert!(err.contains("piece 3") && err.contains("gap"), "{err}");
        let short = MINIMAL.replace("0 1 0", "0 1");
        assert!(read_bridge(short.as_bytes(), &alphabet()).is_err());
        let version = MINIMAL.replace("#version 1", "#version 2");
        assert!(read_bridge(version.as_bytes(), &alphabet()).is_err());
        let split = format!("{MINIMAL}e\t0\t0\tx\t0\t1 0 0\nd\t0\t3\ty\t3\t1 0 0\n");
        assert!(read_bridge(split.as_bytes(), &alphabet()).is_err());
        let jump = MINIMAL.replace("d\t0\t2\tnow\t2", "d\t0\t2\tnow\t4");
        assert!(read_bridge(jump.as_bytes(), &alphabet()).is_err());
        let nan = MINIMAL.replace("0.5 -1e-3 2", "NaN 0 0");
        assert!(read_bridge(nan.as_bytes(), &alphabet()).is_err());
    }

    #[test]
    fn header_only() {
        let f = read_bridge("#version 1\n#alphabet\tO\tB-X\tI-X\n#vocab v\n#budget 8\n".as_bytes(), &alphabet()).unwrap();
        assert!(f.sentences.is_empty());
        assert!(read_bridge("#version 1\n".as_bytes(), &alphabet()).is_err());
    }
}
