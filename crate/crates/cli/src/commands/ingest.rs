use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use lifetraj_core::ingest::{load_corpus, segment_sentences};

use super::write_jsonl;

#[derive(Args)]
pub struct IngestArgs {
    /// Corpus file: one JSON page record per line
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output sentence file (JSONL)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: IngestArgs) -> Result<()> {
    let mut sentences = Vec::new();
    let mut pages = 0usize;
    let mut malformed = 0usize;
    for record in load_corpus(&args.corpus).context("opening corpus")? {
        match record {
            Ok(page) => {
                pages += 1;
                sentences.extend(segment_sentences(&page));
            }
            Err(e) => {
                malformed += 1;
                log::warn!("{e}");
            }
        }
    }
    write_jsonl(&args.out, &sentences)?;
    eprintln!(
        "ingested {pages} pages -> {} sentences ({malformed} malformed records skipped)",
        sentences.len()
    );
    Ok(())
}
