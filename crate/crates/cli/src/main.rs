//! Command-line pipeline for life-trajectory extraction from biography text.

mod commands;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Parser)]
#[command(
    name = "lifetraj",
    version,
    about = "Extract, classify, and analyze (person, time, location) life trajectories from biography text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a corpus and segment it into sentences
    Ingest(commands::ingest::IngestArgs),
    /// Extract candidate triplets from sentences plus NLP annotations
    Extract(commands::extract::ExtractArgs),
    /// Bootstrap positive labels through an external chat-completion endpoint
    Annotate(commands::annotate::AnnotateArgs),
    /// Train the dual-branch classifier
    Train(commands::train::TrainArgs),
    /// Score candidate triplets with a trained model
    Classify(commands::classify::ClassifyArgs),
    /// Compute prediction and coverage metrics
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Normalize, geocode, and network-analyze accepted trajectories
    Analyze(commands::analyze::AnalyzeArgs),
    /// Run ingest → extract → train → classify → evaluate → analyze end to end
    Pipeline(commands::pipeline::PipelineArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USER,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest::run(args),
        Command::Extract(args) => commands::extract::run(args),
        Command::Annotate(args) => commands::annotate::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Classify(args) => commands::classify::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Analyze(args) => commands::analyze::run(args),
        Command::Pipeline(args) => commands::pipeline::run(args),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code_for(&err));
        }
    }
}

/// Input-derived failures are user errors; violated internal contracts
/// (model/training/loss state) are internal errors.
fn exit_code_for(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<lifetraj_core::Error>() {
        Some(
            lifetraj_core::Error::Model(_)
            | lifetraj_core::Error::Train(_)
            | lifetraj_core::Error::Loss(_),
        ) => EXIT_INTERNAL,
        _ => EXIT_USER,
    }
}
