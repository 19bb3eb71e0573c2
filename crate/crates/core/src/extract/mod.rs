//! Candidate (person, time, location) triplet extraction.
//!
//! Target sentences are scanned for categorized entity spans; a dependency
//! parse connects them. For each person the closest verb by LCA distance is
//! picked, then the time and location closest to that verb. The three
//! entities bridged by the verb form one candidate triplet.

mod file_backend;
mod parse_tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{is_target, segment_sentences, BiographyPage, Sentence, SentenceRef};

pub use file_backend::{FileBackend, SentenceAnnotations};
pub use parse_tree::ParseTree;

/// Sentences longer than this are skipped with a warning.
pub const MAX_SENTENCE_TOKENS: usize = 512;

/// Personal pronouns treated as person mentions (lowercase forms).
pub const PERSON_PRONOUNS: &[&str] = &[
    "i", "me", "we", "us", "he", "him", "she", "her", "they", "them",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityCategory {
    Person,
    Time,
    Location,
    Verb,
}

/// A categorized mention inside one sentence; token indices are half-open.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub category: EntityCategory,
    pub token_start: usize,
    pub token_end: usize,
    pub text: String,
}

impl EntitySpan {
    pub fn new(
        category: EntityCategory,
        token_start: usize,
        token_end: usize,
        text: impl Into<String>,
    ) -> Self {
        EntitySpan {
            category,
            token_start,
            token_end,
            text: text.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.token_end - self.token_start
    }

    pub fn is_empty(&self) -> bool {
        self.token_end <= self.token_start
    }

    fn validate(&self, sentence_len: usize) -> Result<()> {
        if self.token_start >= self.token_end || self.token_end > sentence_len {
            return Err(Error::EntitySpan(format!(
                "span [{}, {}) invalid for sentence of {} tokens",
                self.token_start, self.token_end, sentence_len
            )));
        }
        Ok(())
    }
}

/// A raw NER/POS mention as produced by an NLP backend, before category
/// mapping. `label` is one of PERSON/DATE/TIME/DURATION/GPE/LOC/EVENT/FAC/ORG
/// for entities, or VERB for verb tokens.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawEntity {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// One candidate triplet: person, time, location bridged by a verb, all from
/// the same sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTriplet {
    pub page_id: String,
    pub paragraph_index: usize,
    pub sentence_index: usize,
    pub person: EntitySpan,
    pub time: EntitySpan,
    pub location: EntitySpan,
    pub verb: EntitySpan,
}

impl CandidateTriplet {
    pub fn sentence_ref(&self) -> SentenceRef {
        SentenceRef {
            page_id: self.page_id.clone(),
            paragraph_index: self.paragraph_index,
            sentence_index: self.sentence_index,
        }
    }
}

/// Maps a backend label onto a category, per the four-set scheme.
pub fn map_label(label: &str) -> Option<EntityCategory> {
    match label {
        "PERSON" => Some(EntityCategory::Person),
        "DATE" | "TIME" | "DURATION" => Some(EntityCategory::Time),
        "GPE" | "LOC" | "EVENT" | "FAC" | "ORG" => Some(EntityCategory::Location),
        "VERB" => Some(EntityCategory::Verb),
        _ => None,
    }
}

/// Categorizes raw backend mentions into the four entity sets and adds
/// personal pronouns as person spans. Unmapped labels are dropped; among
/// overlapping spans of the same category the longer one wins.
pub fn categorize_entities(sentence: &Sentence, raw_entities: &[RawEntity]) -> Result<Vec<EntitySpan>> {
    let n = sentence.tokens.len();
    let mut spans = Vec::new();
    for raw in raw_entities {
        let Some(category) = map_label(&raw.label) else {
            continue;
        };
        let text = sentence.tokens[raw.start.min(n)..raw.end.min(n)].join(" ");
        let span = EntitySpan::new(category, raw.start, raw.end, text);
        span.validate(n)?;
        spans.push(span);
    }
    // Personal pronouns become single-token person spans unless already
    // covered by a person span.
    for (i, tok) in sentence.tokens.iter().enumerate() {
        let lower = tok.to_lowercase();
        if PERSON_PRONOUNS.contains(&lower.as_str()) {
            let covered = spans.iter().any(|s| {
                s.category == EntityCategory::Person && s.token_start <= i && i < s.token_end
            });
            if !covered {
                spans.push(EntitySpan::new(EntityCategory::Person, i, i + 1, tok.clone()));
            }
        }
    }
    // Longer span wins among same-category overlaps; ties keep the earlier.
    spans.sort_by_key(|s| (s.token_start, std::cmp::Reverse(s.len())));
    let mut kept: Vec<EntitySpan> = Vec::new();
    for span in spans {
        let overlaps_shorter = kept.iter().any(|k| {
            k.category == span.category
                && span.token_start < k.token_end
                && k.token_start < span.token_end
        });
        if !overlaps_shorter {
            kept.push(span);
        }
    }
    kept.sort_by_key(|s| (s.token_start, s.token_end, s.category));
    Ok(kept)
}

/// Anchor of a multi-token span: the span token whose head lies outside the
/// span (its syntactic head); falls back to the last token.
pub fn anchor_token(span: &EntitySpan, tree: &ParseTree) -> usize {
    for i in span.token_start..span.token_end.min(tree.len()) {
        let h = tree.head(i);
        if h < span.token_start || h >= span.token_end {
            return i;
        }
    }
    span.token_end.saturating_sub(1)
}

fn best_by_distance<'a>(
    candidates: impl Iterator<Item = &'a EntitySpan>,
    target_anchor: usize,
    tree: &ParseTree,
) -> Result<Option<&'a EntitySpan>> {
    let mut best: Option<(usize, usize, usize, &EntitySpan)> = None;
    for span in candidates {
        let a = anchor_token(span, tree);
        let dist = tree.lca_distance(a, target_anchor)?;
        let linear = a.abs_diff(target_anchor);
        let key = (dist, linear, span.token_start);
        match best {
            Some((d, l, s, _)) if (d, l, s) <= key => {}
            _ => best = Some((key.0, key.1, key.2, span)),
        }
    }
    Ok(best.map(|(_, _, _, s)| s))
}

/// Builds one candidate triplet per person span.
///
/// For each person the verb minimizing the LCA distance is selected; the time
/// and location spans are then chosen by minimum LCA distance to that verb.
/// Ties break on smaller linear token distance, then leftmost span. Persons
/// lacking a time or location partner are skipped; with no verb span at all
/// the sentence yields nothing.
pub fn select_relevant_pairs(
    entities: &[EntitySpan],
    tree: &ParseTree,
    sentence: &SentenceRef,
) -> Result<Vec<CandidateTriplet>> {
    let verbs: Vec<&EntitySpan> = entities
        .iter()
        .filter(|e| e.category == EntityCategory::Verb)
        .collect();
    if verbs.is_empty() {
        return Ok(Vec::new());
    }
    let mut persons: Vec<&EntitySpan> = entities
        .iter()
        .filter(|e| e.category == EntityCategory::Person)
        .collect();
    persons.sort_by_key(|s| s.token_start);

    let mut triplets = Vec::new();
    for person in persons {
        let p_anchor = anchor_token(person, tree);
        let verb = best_by_distance(verbs.iter().copied(), p_anchor, tree)?
            .expect("verbs is non-empty");
        let v_anchor = anchor_token(verb, tree);
        let time = best_by_distance(
            entities.iter().filter(|e| e.category == EntityCategory::Time),
            v_anchor,
            tree,
        )?;
        let location = best_by_distance(
            entities
                .iter()
                .filter(|e| e.category == EntityCategory::Location),
            v_anchor,
            tree,
        )?;
        if let (Some(time), Some(location)) = (time, location) {
            triplets.push(CandidateTriplet {
                page_id: sentence.page_id.clone(),
                paragraph_index: sentence.paragraph_index,
                sentence_index: sentence.sentence_index,
                person: person.clone(),
                time: time.clone(),
                location: location.clone(),
                verb: verb.clone(),
            });
        }
    }
    Ok(triplets)
}

/// Per-sentence NLP annotations: categorized spans plus the parse tree.
pub trait NlpBackend {
    fn annotate(&self, sentence: &Sentence) -> Result<Option<(Vec<EntitySpan>, ParseTree)>>;
}

/// Extracts candidate triplets from every target sentence of a page, in
/// (paragraph, sentence, person-span) order. Backend failures on a sentence
/// skip that sentence with a warning rather than aborting the page.
pub fn extract_candidates(
    page: &BiographyPage,
    backend: &dyn NlpBackend,
) -> Vec<CandidateTriplet> {
    let sentences = segment_sentences(page);
    extract_from_sentences(&sentences, backend)
}

/// Same as [`extract_candidates`] but over pre-segmented sentences.
pub fn extract_from_sentences(
    sentences: &[Sentence],
    backend: &dyn NlpBackend,
) -> Vec<CandidateTriplet> {
    let mut out = Vec::new();
    for sentence in sentences {
        if sentence.tokens.len() > MAX_SENTENCE_TOKENS {
            log::warn!(
                "skipping {}/{}/{}: {} tokens exceeds the {MAX_SENTENCE_TOKENS}-token cap",
                sentence.page_id,
                sentence.paragraph_index,
                sentence.sentence_index,
                sentence.tokens.len()
            );
            continue;
        }
        let annotated = match backend.annotate(sentence) {
            Ok(Some(a)) => a,
            Ok(None) => continue,
            Err(e) => {
                log::warn!(
                    "backend failed on {}/{}/{}: {e}",
                    sentence.page_id,
                    sentence.paragraph_index,
                    sentence.sentence_index
                );
                continue;
            }
        };
        let (spans, tree) = annotated;
        if !is_target(&spans) {
            continue;
        }
        match select_relevant_pairs(&spans, &tree, &sentence.sentence_ref()) {
            Ok(triplets) => out.extend(triplets),
            Err(e) => log::warn!(
                "pair selection failed on {}/{}/{}: {e}",
                sentence.page_id,
                sentence.paragraph_index,
                sentence.sentence_index
            ),
        }
    }
    out
}
