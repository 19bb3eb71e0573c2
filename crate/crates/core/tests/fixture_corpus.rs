//! Sanity checks over the bundled fixture corpus: the annotation file lines
//! up with the ingest tokenization, extraction covers the hand-listed
//! trajectory mentions, and every dataset record survives context building.

use std::path::PathBuf;

use lifetraj_core::context::load_dataset;
use lifetraj_core::extract::{extract_from_sentences, FileBackend};
use lifetraj_core::ingest::{load_corpus, segment_sentences};
use serde::Deserialize;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[derive(Deserialize)]
struct ManualMention {
    page_id: String,
    person: String,
    time: String,
    location: String,
}

fn load_manual() -> Vec<ManualMention> {
    let text = std::fs::read_to_string(fixture("manual_trajectories.jsonl")).unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn fixture_annotations_cover_every_sentence() {
    let backend = FileBackend::load(&fixture("mini_annotations.jsonl")).unwrap();
    let pages: Vec<_> = load_corpus(&fixture("mini_corpus.jsonl"))
        .unwrap()
        .map(|r| r.unwrap())
        .collect();
    assert!(pages.len() >= 4, "need at least 4 fixture pages");
    let mut sentence_count = 0;
    for page in &pages {
        for sentence in segment_sentences(&page) {
            sentence_count += 1;
            let ann = backend
                .get(&sentence.sentence_ref())
                .unwrap_or_else(|| panic!("no annotation for {:?}", sentence.sentence_ref()));
            assert_eq!(
                ann.tokens, sentence.tokens,
                "tokens diverge at {:?}",
                sentence.sentence_ref()
            );
        }
    }
    assert_eq!(
        sentence_count,
        backend.len(),
        "annotation file has orphan sentences"
    );
}

#[test]
fn extraction_covers_most_manual_trajectories() {
    let backend = FileBackend::load(&fixture("mini_annotations.jsonl")).unwrap();
    let pages: Vec<_> = load_corpus(&fixture("mini_corpus.jsonl"))
        .unwrap()
        .map(|r| r.unwrap())
        .collect();
    let manual = load_manual();
    assert!(manual.len() >= 60, "need at least 60 manual mentions");

    let mut extracted = Vec::new();
    for page in &pages {
        let sentences = segment_sentences(page);
        extracted.extend(extract_from_sentences(&sentences, &backend));
    }
    let covered = manual
        .iter()
        .filter(|m| {
            extracted.iter().any(|t| {
                t.page_id == m.page_id
                    && t.person.text == m.person
                    && t.time.text == m.time
                    && t.location.text == m.location
            })
        })
        .count();
    let recall = covered as f64 / manual.len() as f64;
    println!(
        "extraction coverage: {covered}/{} manual mentions (recall {recall:.4})",
        manual.len()
    );
    assert!(
        recall >= 0.85,
        "coverage recall {recall:.4} below 0.85 ({covered}/{})",
        manual.len()
    );
    assert!(recall < 1.0, "fixture should retain some genuinely hard mentions");
}

#[test]
fn labeled_dataset_loads_into_valid_examples() {
    let examples = load_dataset(&fixture("labeled.jsonl")).unwrap();
    assert!(examples.len() >= 100);
    let positives = examples.iter().filter(|e| e.label == Some(1)).count();
    let negatives = examples.iter().filter(|e| e.label == Some(0)).count();
    assert!(positives >= 40 && negatives >= 40);
    for e in &examples {
        e.validate().unwrap();
        assert!(!e.context.is_empty());
    }
    let unlabeled = load_dataset(&fixture("unlabeled.jsonl")).unwrap();
    assert!(unlabeled.len() >= 40);
    assert!(unlabeled.iter().all(|e| e.label.is_none()));
}
