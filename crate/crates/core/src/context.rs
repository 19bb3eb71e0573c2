//! Context assembly for candidate triplets.
//!
//! A triplet's context is the subsequence of its paragraph's sentences that
//! mention the triplet's time or location string (always including the source
//! sentence). The model input sequence puts the triplet elements first,
//! separated from the context by a single separator token.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::CandidateTriplet;
use crate::ingest::{segment_sentences, tokenize, BiographyPage, Sentence};

/// Separator between triplet elements and context in the input sequence.
pub const SEPARATOR_TOKEN: &str = "[SEP]";

/// Maximum model input sequence length (triplet + separator + context).
pub const MAX_SEQUENCE_TOKENS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleSource {
    Manual,
    Llm,
    Unlabeled,
}

/// A classifiable candidate: triplet element strings plus its context tokens
/// and an optional binary label. Label present iff source != unlabeled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Example {
    pub person: String,
    pub time: String,
    pub location: String,
    pub context: Vec<String>,
    pub label: Option<u8>,
    pub source: ExampleSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_id: Option<String>,
}

impl Example {
    pub fn validate(&self) -> Result<()> {
        match (self.source, self.label) {
            (ExampleSource::Unlabeled, Some(_)) => {
                Err(Error::Context("unlabeled example carries a label".into()))
            }
            (ExampleSource::Unlabeled, None) => Ok(()),
            (_, None) => Err(Error::Context("labeled source without a label".into())),
            (_, Some(l)) if l > 1 => Err(Error::Context(format!("label {l} not binary"))),
            _ => Ok(()),
        }
    }

    /// The transformer-branch input: person, time, location tokens, a
    /// separator, then the context (capped; triplet tokens always kept).
    pub fn input_sequence(&self) -> Vec<String> {
        build_input_sequence(&self.person, &self.time, &self.location, &self.context)
    }
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Selects the context sentences for a triplet from its source paragraph:
/// every sentence whose text contains the time or the location string
/// (surface match after whitespace normalization), in document order. The
/// source sentence is always included.
pub fn build_context(triplet: &CandidateTriplet, paragraph: &[Sentence]) -> Vec<String> {
    let time = normalize_ws(&triplet.time.text);
    let location = normalize_ws(&triplet.location.text);
    let mut tokens = Vec::new();
    for sentence in paragraph {
        let text = normalize_ws(&sentence.text);
        let is_source = sentence.paragraph_index == triplet.paragraph_index
            && sentence.sentence_index == triplet.sentence_index
            && sentence.page_id == triplet.page_id;
        if is_source || text.contains(&time) || text.contains(&location) {
            tokens.extend(sentence.tokens.iter().cloned());
        }
    }
    tokens
}

/// Context construction from a raw paragraph string (dataset records carry
/// the paragraph text, not segmented sentences). Sentences containing the
/// time or location string are kept; if none match, the whole paragraph is
/// the context.
pub fn build_context_from_paragraph(
    time: &str,
    location: &str,
    paragraph: &str,
) -> Vec<String> {
    let time = normalize_ws(time);
    let location = normalize_ws(location);
    let page = BiographyPage {
        page_id: String::new(),
        title: String::new(),
        paragraphs: vec![paragraph.to_string()],
    };
    let sentences = segment_sentences(&page);
    let mut tokens = Vec::new();
    for sentence in &sentences {
        let text = normalize_ws(&sentence.text);
        if text.contains(&time) || text.contains(&location) {
            tokens.extend(sentence.tokens.iter().cloned());
        }
    }
    if tokens.is_empty() {
        tokens = tokenize(paragraph);
    }
    tokens
}

/// Assembles the input sequence `s`: triplet tokens, separator, context.
/// The total length is capped at [`MAX_SEQUENCE_TOKENS`] by truncating the
/// context; the triplet tokens are always preserved.
pub fn build_input_sequence(
    person: &str,
    time: &str,
    location: &str,
    context: &[String],
) -> Vec<String> {
    let mut seq = tokenize(person);
    seq.extend(tokenize(time));
    seq.extend(tokenize(location));
    seq.push(SEPARATOR_TOKEN.to_string());
    let budget = MAX_SEQUENCE_TOKENS.saturating_sub(seq.len());
    seq.extend(context.iter().take(budget).cloned());
    seq
}

/// One record of the labeled/unlabeled dataset files:
/// `{"person","time","location","label"?,"paragraph","page_id"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub person: String,
    pub time: String,
    pub location: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    pub paragraph: String,
    pub page_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<ExampleSource>,
}

impl DatasetRecord {
    pub fn into_example(self) -> Result<Example> {
        let context =
            build_context_from_paragraph(&self.time, &self.location, &self.paragraph);
        if context.is_empty() {
            return Err(Error::Context(format!(
                "empty context for triplet ({}, {}, {})",
                self.person, self.time, self.location
            )));
        }
        let source = match (self.source, self.label) {
            (Some(s), _) => s,
            (None, Some(_)) => ExampleSource::Manual,
            (None, None) => ExampleSource::Unlabeled,
        };
        let example = Example {
            person: self.person,
            time: self.time,
            location: self.location,
            context,
            label: self.label,
            source,
            page_id: Some(self.page_id),
        };
        example.validate()?;
        Ok(example)
    }
}

/// Loads a JSONL dataset file as raw records. Malformed lines are errors
/// carrying the line number.
pub fn load_dataset_records(path: &Path) -> Result<Vec<DatasetRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(records)
}

/// Loads a JSONL dataset file into context-built examples.
pub fn load_dataset(path: &Path) -> Result<Vec<Example>> {
    load_dataset_records(path)?
        .into_iter()
        .enumerate()
        .map(|(idx, record)| {
            record.into_example().map_err(|e| Error::MalformedRecord {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
