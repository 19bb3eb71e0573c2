use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use lifetraj_core::context::{load_dataset, load_dataset_records};
use lifetraj_core::model::{HashEmbedder, ModelConfig};
use lifetraj_core::trainer::{split_indices, train, Splits, TrainOptions};

use super::{jsonl_bytes, write_atomic, write_jsonl};

#[derive(Args)]
pub struct TrainArgs {
    /// Model/loss configuration file (JSON); built-in defaults when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Labeled dataset (JSONL)
    #[arg(long)]
    pub labeled: PathBuf,
    /// Unlabeled pool (JSONL); required unless --no-ssl
    #[arg(long)]
    pub unlabeled: Option<PathBuf>,
    /// Output checkpoint path
    #[arg(long)]
    pub out: PathBuf,
    /// Per-batch training log (JSONL); defaults to <out>.log.jsonl
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Write the held-out test split here for later evaluation
    #[arg(long)]
    pub emit_test: Option<PathBuf>,
    /// Disable the supervised contrastive loss term
    #[arg(long)]
    pub no_scl: bool,
    /// Disable the pseudo-label semi-supervised loss term
    #[arg(long)]
    pub no_ssl: bool,
    /// Random seed (overrides the config file)
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 50)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
}

/// CLI flag > config file > built-in default.
pub fn resolve_config(
    path: Option<&Path>,
    seed: Option<u64>,
    no_scl: bool,
    no_ssl: bool,
) -> Result<ModelConfig> {
    let mut config = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ModelConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if no_scl {
        config.use_scl = false;
    }
    if no_ssl {
        config.use_ssl = false;
    }
    config.validate()?;
    Ok(config)
}

pub fn run(args: TrainArgs) -> Result<()> {
    let config = resolve_config(
        args.config.as_deref(),
        args.seed,
        args.no_scl,
        args.no_ssl,
    )?;
    let records = load_dataset_records(&args.labeled).context("loading labeled dataset")?;
    let examples = records
        .iter()
        .cloned()
        .enumerate()
        .map(|(idx, r)| {
            r.into_example()
                .with_context(|| format!("{}:{}", args.labeled.display(), idx + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let unlabeled = match &args.unlabeled {
        Some(path) => load_dataset(path).context("loading unlabeled pool")?,
        None => Vec::new(),
    };
    let labels: Vec<Option<u8>> = examples.iter().map(|e| e.label).collect();
    let idx = split_indices(&labels, config.seed)?;
    let collect = |ids: &[usize]| ids.iter().map(|&i| examples[i].clone()).collect::<Vec<_>>();
    let splits = Splits {
        train: collect(&idx.train),
        val: collect(&idx.val),
        test: collect(&idx.test),
    };
    eprintln!(
        "split {} labeled examples -> {} train / {} val / {} test; {} unlabeled",
        examples.len(),
        splits.train.len(),
        splits.val.len(),
        splits.test.len(),
        unlabeled.len()
    );
    let embedder = HashEmbedder::new(config.d, config.seed);
    let options = TrainOptions {
        batch_size: args.batch_size,
        max_epochs: args.max_epochs,
        patience: args.patience,
    };
    let mut outcome = train(&config, &splits, &unlabeled, &embedder, &options)?;

    let log_path = args
        .log
        .clone()
        .unwrap_or_else(|| args.out.with_extension("log.jsonl"));
    write_atomic(&log_path, &jsonl_bytes(&outcome.log)?)?;
    if let Some(test_path) = &args.emit_test {
        // Emit raw dataset records so the file feeds straight into `evaluate`.
        let test_records: Vec<_> = idx.test.iter().map(|&i| records[i].clone()).collect();
        write_jsonl(test_path, &test_records)?;
    }
    let mut buffer = Vec::new();
    outcome
        .model
        .save_to_writer(&mut buffer)
        .context("serializing checkpoint")?;
    write_atomic(&args.out, &buffer)?;
    eprintln!(
        "trained {} epochs; best validation F1 {:.4} at epoch {}; checkpoint -> {}",
        outcome.epochs_run,
        outcome.best_val_f1,
        outcome.best_epoch,
        args.out.display()
    );
    Ok(())
}
