use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use lifetraj_core::context::{load_dataset, Example};
use lifetraj_core::evaluator::{compute_metrics, per_page_recall, MetricReport};
use lifetraj_core::model::{HashEmbedder, TripletClassifier};

use super::write_atomic;

#[derive(Args)]
pub struct EvaluateArgs {
    /// Trained checkpoint
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled test set (JSONL dataset records)
    #[arg(long)]
    pub test: PathBuf,
    /// Per-page coverage set: positive-only records grouped by page
    #[arg(long)]
    pub regular: Option<PathBuf>,
    /// Output report (JSON)
    #[arg(long)]
    pub report: PathBuf,
}

fn predict(
    model: &TripletClassifier,
    embedder: &HashEmbedder,
    examples: &[Example],
) -> Result<Vec<u8>> {
    examples
        .iter()
        .map(|example| {
            let input = model.featurize(example, embedder)?;
            Ok(model.forward(&input).0.predicted_label())
        })
        .collect()
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let model = TripletClassifier::load(&args.model).context("loading checkpoint")?;
    let embedder = HashEmbedder::new(model.config.d, model.config.seed);

    let test = load_dataset(&args.test).context("loading test set")?;
    let labels: Vec<u8> = test
        .iter()
        .map(|e| e.label.context("test example without label"))
        .collect::<Result<_>>()?;
    let predictions = predict(&model, &embedder, &test)?;
    let sources: Vec<_> = test.iter().map(|e| e.source).collect();
    let mut report: MetricReport = compute_metrics(&predictions, &labels, Some(&sources))?;

    if let Some(regular_path) = &args.regular {
        let regular = load_dataset(regular_path).context("loading coverage set")?;
        let preds = predict(&model, &embedder, &regular)?;
        let items: Vec<(String, u8, u8)> = regular
            .iter()
            .zip(&preds)
            .map(|(example, &pred)| {
                Ok((
                    example.page_id.clone().context("coverage example without page_id")?,
                    pred,
                    example.label.context("coverage example without label")?,
                ))
            })
            .collect::<Result<_>>()?;
        report.per_page = Some(per_page_recall(&items)?);
    }

    write_atomic(&args.report, serde_json::to_string_pretty(&report)?.as_bytes())?;
    let fmt = |m: Option<f64>| m.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    eprintln!(
        "test: acc {} precision {} recall {} f1 {}",
        fmt(report.overall.accuracy),
        fmt(report.overall.precision),
        fmt(report.overall.recall),
        fmt(report.overall.f1),
    );
    if let Some(per_page) = &report.per_page {
        eprintln!(
            "coverage: avg recall {:.4} (std {:.4}) over {} pages",
            per_page.avg_recall,
            per_page.recall_std,
            per_page.pages.len()
        );
    }
    Ok(())
}
