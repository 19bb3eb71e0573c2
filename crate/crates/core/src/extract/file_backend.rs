//! File-based NLP backend reading precomputed per-sentence annotations.
//!
//! Annotation files are JSONL, one object per sentence:
//! `{"page_id": str, "paragraph_index": int, "sentence_index": int,
//!   "tokens": [str], "entities": [{"label": str, "start": int, "end": int}],
//!   "heads": [int], "lemmas": [str]?}`
//!
//! `heads[i]` is the 0-based head of token `i`; the root points to itself.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Sentence, SentenceRef};

use super::{categorize_entities, EntitySpan, NlpBackend, ParseTree, RawEntity};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceAnnotations {
    pub page_id: String,
    pub paragraph_index: usize,
    pub sentence_index: usize,
    pub tokens: Vec<String>,
    pub entities: Vec<RawEntity>,
    pub heads: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<Vec<String>>,
}

impl SentenceAnnotations {
    pub fn sentence_ref(&self) -> SentenceRef {
        SentenceRef {
            page_id: self.page_id.clone(),
            paragraph_index: self.paragraph_index,
            sentence_index: self.sentence_index,
        }
    }
}

/// Backend serving annotations loaded from a JSONL file, keyed by sentence
/// position. Shareable across threads (read-only after load).
pub struct FileBackend {
    by_ref: HashMap<SentenceRef, SentenceAnnotations>,
}

impl FileBackend {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut by_ref = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let ann: SentenceAnnotations =
                serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            by_ref.insert(ann.sentence_ref(), ann);
        }
        Ok(FileBackend { by_ref })
    }

    pub fn from_annotations(annotations: Vec<SentenceAnnotations>) -> Self {
        FileBackend {
            by_ref: annotations
                .into_iter()
                .map(|a| (a.sentence_ref(), a))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.by_ref.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_ref.is_empty()
    }

    pub fn get(&self, sref: &SentenceRef) -> Option<&SentenceAnnotations> {
        self.by_ref.get(sref)
    }

    /// Lemma of the token at `index`, falling back to the lowercased surface
    /// form when the annotation file carries no lemmas.
    pub fn lemma(&self, sref: &SentenceRef, index: usize) -> Option<String> {
        let ann = self.by_ref.get(sref)?;
        if let Some(lemmas) = &ann.lemmas {
            if let Some(l) = lemmas.get(index) {
                return Some(l.clone());
            }
        }
        ann.tokens.get(index).map(|t| t.to_lowercase())
    }
}

impl NlpBackend for FileBackend {
    fn annotate(&self, sentence: &Sentence) -> Result<Option<(Vec<EntitySpan>, ParseTree)>> {
        let Some(ann) = self.by_ref.get(&sentence.sentence_ref()) else {
            return Ok(None);
        };
        if ann.tokens != sentence.tokens {
            return Err(Error::EntitySpan(format!(
                "annotation tokens diverge from sentence tokens at {}/{}/{}",
                sentence.page_id, sentence.paragraph_index, sentence.sentence_index
            )));
        }
        let spans = categorize_entities(sentence, &ann.entities)?;
        let tree = ParseTree::new(ann.heads.clone())?;
        if tree.len() != sentence.tokens.len() {
            return Err(Error::ParseTree(format!(
                "head map length {} does not match {} tokens",
                tree.len(),
                sentence.tokens.len()
            )));
        }
        Ok(Some((spans, tree)))
    }
}
