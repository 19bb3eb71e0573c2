//! Life-trajectory extraction from biography text.
//!
//! The pipeline turns biography pages into geocoded trajectory records:
//!
//! 1. [`ingest`] loads JSONL corpora and segments paragraphs into sentences.
//! 2. [`extract`] pairs person/time/location entities through dependency-tree
//!    LCA distances, producing candidate triplets.
//! 3. [`context`] assembles each candidate's paragraph context and the model
//!    input sequence.
//! 4. [`model`] scores candidates with a dual-branch (convolutional +
//!    transformer) classifier; [`losses`] and [`trainer`] implement the
//!    contrastive + pseudo-label training objective.
//! 5. [`evaluator`] computes prediction and per-page coverage metrics.
//! 6. [`annotator`] optionally bootstraps positive labels from an external
//!    chat-completion endpoint.
//! 7. [`analysis`] normalizes accepted trajectories, geocodes them, and builds
//!    the co-location interaction network.

pub mod analysis;
pub mod annotator;
pub mod context;
pub mod error;
pub mod evaluator;
pub mod extract;
pub mod ingest;
pub mod losses;
pub mod model;
pub mod nn;
pub mod trainer;

pub use error::{Error, Result};
