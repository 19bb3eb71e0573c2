//! Corpus loading and sentence segmentation.
//!
//! A corpus is a JSON Lines file with one biography page per line:
//! `{"page_id": str, "title": str, "paragraphs": [str, ...]}`.

mod splitter;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::extract::{EntityCategory, EntitySpan};

pub use splitter::{tokenize, SentenceSplitter};

/// One biography page: an identifier, a title, and ordered paragraphs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BiographyPage {
    pub page_id: String,
    pub title: String,
    pub paragraphs: Vec<String>,
}

/// Position of a sentence within the corpus.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SentenceRef {
    pub page_id: String,
    pub paragraph_index: usize,
    pub sentence_index: usize,
}

/// A segmented sentence with its token list.
///
/// Tokens reconstruct `text` up to whitespace: concatenating the tokens and
/// stripping all whitespace from `text` yield the same string.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Sentence {
    pub page_id: String,
    pub paragraph_index: usize,
    pub sentence_index: usize,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn sentence_ref(&self) -> SentenceRef {
        SentenceRef {
            page_id: self.page_id.clone(),
            paragraph_index: self.paragraph_index,
            sentence_index: self.sentence_index,
        }
    }
}

/// Outcome of reading one corpus line: a page, or a per-record error that
/// callers are expected to report rather than drop.
pub type PageRecord = Result<BiographyPage>;

/// Streams pages from a JSONL corpus file in file order.
///
/// I/O failures opening the file are fatal; malformed lines surface as
/// per-record `Error::MalformedRecord` values carrying the line number.
pub fn load_corpus(path: &Path) -> Result<impl Iterator<Item = PageRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let path = path.to_path_buf();
    Ok(reader.lines().enumerate().filter_map(move |(idx, line)| {
        let line_no = idx + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::io(path.clone(), e))),
        };
        if line.trim().is_empty() {
            return None;
        }
        match serde_json::from_str::<BiographyPage>(&line) {
            Ok(mut page) => {
                // NFC-normalize all text at the load boundary.
                page.title = page.title.nfc().collect();
                page.paragraphs = page.paragraphs.iter().map(|p| p.nfc().collect()).collect();
                if page.page_id.is_empty() {
                    return Some(Err(Error::MalformedRecord {
                        path: path.clone(),
                        line: line_no,
                        message: "empty page_id".into(),
                    }));
                }
                Some(Ok(page))
            }
            Err(e) => Some(Err(Error::MalformedRecord {
                path: path.clone(),
                line: line_no,
                message: e.to_string(),
            })),
        }
    }))
}

/// Splits every paragraph of a page into sentences, preserving order.
///
/// Empty paragraphs contribute zero sentences. Deterministic for fixed input.
pub fn segment_sentences(page: &BiographyPage) -> Vec<Sentence> {
    let splitter = SentenceSplitter::default();
    segment_sentences_with(page, &splitter)
}

pub fn segment_sentences_with(page: &BiographyPage, splitter: &SentenceSplitter) -> Vec<Sentence> {
    let mut out = Vec::new();
    for (para_idx, paragraph) in page.paragraphs.iter().enumerate() {
        for (sent_idx, text) in splitter.split(paragraph).into_iter().enumerate() {
            let tokens = tokenize(&text);
            out.push(Sentence {
                page_id: page.page_id.clone(),
                paragraph_index: para_idx,
                sentence_index: sent_idx,
                text,
                tokens,
            });
        }
    }
    out
}

/// Retains sentences that contain at least one TIME span and at least one
/// LOCATION span. Sentences without annotations count as having no entities.
///
/// The result is a subsequence of the input and the filter is idempotent.
pub fn filter_target_sentences<'a>(
    sentences: &'a [Sentence],
    annotations: impl Fn(&Sentence) -> Option<&'a [EntitySpan]>,
) -> Vec<&'a Sentence> {
    sentences
        .iter()
        .filter(|s| {
            let spans = match annotations(s) {
                Some(spans) => spans,
                None => return false,
            };
            is_target(spans)
        })
        .collect()
}

/// Target-sentence test: at least one TIME span and at least one LOCATION span.
pub fn is_target(spans: &[EntitySpan]) -> bool {
    spans.iter().any(|s| s.category == EntityCategory::Time)
        && spans.iter().any(|s| s.category == EntityCategory::Location)
}
