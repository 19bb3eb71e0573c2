use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use lifetraj_core::context::{build_context, DatasetRecord, Example, ExampleSource};
use lifetraj_core::extract::CandidateTriplet;
use lifetraj_core::ingest::Sentence;
use lifetraj_core::model::{HashEmbedder, TripletClassifier};
use serde::Serialize;

use super::{read_jsonl, write_jsonl};

#[derive(Args)]
pub struct ClassifyArgs {
    /// Trained checkpoint
    #[arg(long)]
    pub model: PathBuf,
    /// Candidate triplets: `extract` output, or dataset records carrying a
    /// "paragraph" field
    #[arg(long)]
    pub candidates: PathBuf,
    /// Sentence file (`ingest` output); required for `extract`-shaped input
    #[arg(long)]
    pub sentences: Option<PathBuf>,
    /// Output predictions (JSONL)
    #[arg(long)]
    pub out: PathBuf,
}

/// One scored candidate.
#[derive(Debug, Serialize)]
pub struct Prediction {
    pub person: String,
    pub time: String,
    pub location: String,
    pub page_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verb: Option<String>,
    /// Positive-class probability.
    pub score: f64,
    pub label: u8,
}

pub fn run(args: ClassifyArgs) -> Result<()> {
    let model = TripletClassifier::load(&args.model).context("loading checkpoint")?;
    let embedder = HashEmbedder::new(model.config.d, model.config.seed);

    let raw: Vec<serde_json::Value> = read_jsonl(&args.candidates)?;
    if raw.is_empty() {
        bail!("no candidate records in {}", args.candidates.display());
    }
    let dataset_shaped = raw[0].get("paragraph").is_some();
    let inputs: Vec<(Example, Option<String>)> = if dataset_shaped {
        raw.into_iter()
            .map(|value| {
                let record: DatasetRecord = serde_json::from_value(value)?;
                let mut example = clear_label(record.into_example()?);
                example.source = ExampleSource::Unlabeled;
                Ok((example, None))
            })
            .collect::<Result<_>>()?
    } else {
        let Some(sentences_path) = &args.sentences else {
            bail!("--sentences is required when classifying extract output");
        };
        let sentences: Vec<Sentence> = read_jsonl(sentences_path)?;
        let mut by_paragraph: BTreeMap<(String, usize), Vec<Sentence>> = BTreeMap::new();
        for sentence in sentences {
            by_paragraph
                .entry((sentence.page_id.clone(), sentence.paragraph_index))
                .or_default()
                .push(sentence);
        }
        for group in by_paragraph.values_mut() {
            group.sort_by_key(|s| s.sentence_index);
        }
        raw.into_iter()
            .map(|value| {
                let triplet: CandidateTriplet = serde_json::from_value(value)?;
                let key = (triplet.page_id.clone(), triplet.paragraph_index);
                let Some(paragraph) = by_paragraph.get(&key) else {
                    bail!(
                        "no sentences for page {} paragraph {}",
                        triplet.page_id,
                        triplet.paragraph_index
                    );
                };
                let context = build_context(&triplet, paragraph);
                let example = Example {
                    person: triplet.person.text.clone(),
                    time: triplet.time.text.clone(),
                    location: triplet.location.text.clone(),
                    context,
                    label: None,
                    source: ExampleSource::Unlabeled,
                    page_id: Some(triplet.page_id.clone()),
                };
                Ok((example, Some(triplet.verb.text.clone())))
            })
            .collect::<Result<_>>()?
    };

    let mut predictions = Vec::with_capacity(inputs.len());
    for (example, verb) in &inputs {
        let input = model.featurize(example, &embedder)?;
        let (output, _) = model.forward(&input);
        predictions.push(Prediction {
            person: example.person.clone(),
            time: example.time.clone(),
            location: example.location.clone(),
            page_id: example.page_id.clone().unwrap_or_default(),
            verb: verb.clone(),
            score: output.y_pred[1],
            label: output.predicted_label(),
        });
    }
    let accepted = predictions.iter().filter(|p| p.label == 1).count();
    write_jsonl(&args.out, &predictions)?;
    eprintln!(
        "classified {} candidates: {accepted} accepted as trajectories",
        predictions.len()
    );
    Ok(())
}

fn clear_label(mut example: Example) -> Example {
    example.label = None;
    example
}
