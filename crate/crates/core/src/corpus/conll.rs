//! Two-column CoNLL: `token<sep>tag` per line, blank line between sentences,
//! `#doc <id>` (or `-DOCSTART-`) between documents.

use std::fmt::Write as _;
use std::io::BufRead;

use super::{BioTag, Corpus, Document, LabelSet, Sentence, Token};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ColumnSep {
    /// Any run of spaces or tabs.
    #[default]
    Whitespace,
    /// Exactly one tab.
    Tab,
}

const DOC_MARKER: &str = "#doc";
const DOCSTART: &str = "-DOCSTART-";

/// Parses a tagged corpus. Every token line must have exactly two columns and
/// a tag matching `O|[BI]-.+`; tags are not checked for BIO validity.
pub fn parse_conll<R: BufRead>(input: R, sep: ColumnSep) -> Result<Corpus> {
    parse(input, sep, false)
}

/// Like [`parse_conll`] but also accepts one-column lines; all tags are dropped.
pub fn parse_conll_untagged<R: BufRead>(input: R, sep: ColumnSep) -> Result<Corpus> {
    parse(input, sep, true)
}

struct Builder {
    documents: Vec<Document>,
    tokens: Vec<Token>,
    tags: Vec<BioTag>,
    keep_tags: bool,
}

impl Builder {
    fn flush_sentence(&mut self) {
        if self.tokens.is_empty() {
            return;
        }
        if self.documents.is_empty() {
            self.documents.push(Document::new("doc0", Vec::new()));
        }
        let sentence = Sentence {
            tokens: std::mem::take(&mut self.tokens),
            tags: self.keep_tags.then(|| std::mem::take(&mut self.tags)),
        };
        self.tags.clear();
        self.documents.last_mut().unwrap().sentences.push(sentence);
    }

    fn start_document(&mut self, id: Option<&str>) {
        self.flush_sentence();
        let id = match id {
            Some(id) => id.to_string(),
            None => format!("doc{}", self.documents.len()),
        };
        self.documents.push(Document::new(id, Vec::new()));
    }
}

fn parse<R: BufRead>(input: R, sep: ColumnSep, untagged: bool) -> Result<Corpus> {
    let mut b = Builder {
        documents: Vec::new(),
        tokens: Vec::new(),
        tags: Vec::new(),
        keep_tags: !untagged,
    };
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            b.flush_sentence();
            continue;
        }
        if let Some(rest) = line.strip_prefix(DOC_MARKER) {
            if rest.is_empty() || rest.starts_with([' ', '\t']) {
                let id = rest.trim();
                b.start_document((!id.is_empty()).then_some(id));
                continue;
            }
        }
        let columns: Vec<&str> = match sep {
            ColumnSep::Whitespace => line.split_whitespace().collect(),
            ColumnSep::Tab => line.split('\t').collect(),
        };
        if columns.first() == Some(&DOCSTART) {
            b.start_document(None);
            continue;
        }
        match (columns.as_slice(), untagged) {
            ([token, tag], _) => {
                if token.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "empty token".into(),
                    });
                }
                let tag: BioTag = tag.parse().map_err(|_| Error::Schema {
                    line: line_no,
                    tag: tag.to_string(),
                })?;
                b.tokens.push(Token::new(*token));
                b.tags.push(tag);
            }
            ([token], true) if !token.is_empty() => b.tokens.push(Token::new(*token)),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "expected {} columns, found {}",
                        if untagged { "1 or 2" } else { "2" },
                        columns.len()
                    ),
                })
            }
        }
    }
    b.flush_sentence();
    let label_set = LabelSet::infer(&b.documents);
    Ok(Corpus {
        documents: b.documents,
        label_set,
    })
}

/// Serializes a fully tagged corpus with tab separators. Every document is
/// preceded by a `#doc <id>` line and every sentence followed by a blank line.
pub fn write_conll(corpus: &Corpus) -> Result<String> {
    let mut out = String::new();
    for doc in &corpus.documents {
        writeln!(out, "{DOC_MARKER} {}", doc.id).unwrap();
        for (si, sentence) in doc.sentences.iter().enumerate() {
            let tags = sentence.tags.as_ref().ok_or_else(|| Error::Untagged {
                document: doc.id.clone(),
                sentence: si,
            })?;
            for (token, tag) in sentence.tokens.iter().zip(tags) {
                writeln!(out, "{}\t{}", token.text, tag).unwrap();
            }
            out.push('\n');
        }
    }
    Ok(out)
}
