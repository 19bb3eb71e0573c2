use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use lifetraj_core::extract::{extract_from_sentences, FileBackend};
use lifetraj_core::ingest::Sentence;

use super::{read_jsonl, write_jsonl};

#[derive(Args)]
pub struct ExtractArgs {
    /// Sentence file produced by `ingest`
    #[arg(long)]
    pub sentences: PathBuf,
    /// Precomputed per-sentence NLP annotations (JSONL)
    #[arg(long)]
    pub annotations: PathBuf,
    /// Output candidate-triplet file (JSONL)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: ExtractArgs) -> Result<()> {
    let sentences: Vec<Sentence> = read_jsonl(&args.sentences)?;
    let backend = FileBackend::load(&args.annotations).context("loading annotations")?;
    let candidates = extract_from_sentences(&sentences, &backend);
    write_jsonl(&args.out, &candidates)?;
    eprintln!(
        "extracted {} candidate triplets from {} sentences",
        candidates.len(),
        sentences.len()
    );
    Ok(())
}
