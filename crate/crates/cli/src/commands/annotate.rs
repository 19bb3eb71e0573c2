use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Args;
use lifetraj_core::annotator::{
    annotate, to_dataset_records, AnnotationJob, HttpChatClient, PromptTemplates,
};
use lifetraj_core::ingest::Sentence;

use super::{read_jsonl, write_jsonl};

#[derive(Args)]
pub struct AnnotateArgs {
    /// Target-sentence file (JSONL, `ingest` output)
    #[arg(long)]
    pub sentences: PathBuf,
    /// Output dataset file with verified positive labels (JSONL)
    #[arg(long)]
    pub out: PathBuf,
    /// Chat-completion endpoint URL
    #[arg(long)]
    pub endpoint: String,
    /// Model name passed to the endpoint
    #[arg(long, default_value = "gpt-3.5-turbo")]
    pub model: String,
    /// Extraction prompt template file
    #[arg(long)]
    pub extract_prompt: PathBuf,
    /// Verification prompt template file
    #[arg(long)]
    pub verify_prompt: PathBuf,
    /// Sampled extraction trials per sentence
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    /// Maximum in-flight sentences
    #[arg(long, default_value_t = 1)]
    pub concurrency: usize,
    /// HTTP retries per request
    #[arg(long, default_value_t = 3)]
    pub retries: usize,
}

pub fn run(args: AnnotateArgs) -> Result<()> {
    let sentences: Vec<Sentence> = read_jsonl(&args.sentences)?;
    let templates = PromptTemplates::load(&args.extract_prompt, &args.verify_prompt)
        .context("loading prompt templates")?;
    let client = HttpChatClient::new(&args.endpoint, &args.model)
        .with_retries(args.retries, Duration::from_millis(500));
    let job = AnnotationJob {
        extraction_trials: args.trials,
        concurrency: args.concurrency,
        ..AnnotationJob::default()
    };
    let (examples, stats) = annotate(&sentences, &client, &templates, &job);
    let records = to_dataset_records(&examples, &sentences);
    write_jsonl(&args.out, &records)?;
    eprintln!(
        "annotated {} sentences: {} extracted, {} verified, {} unparseable responses, {} failed sentences",
        stats.sentences, stats.extracted, stats.verified, stats.unparseable_responses,
        stats.failed_sentences
    );
    Ok(())
}
