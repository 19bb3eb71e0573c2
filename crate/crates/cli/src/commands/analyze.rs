use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use lifetraj_core::analysis::{
    build_interaction_network, normalize_time, pagerank, resolve_person, snapshot,
    verb_histogram, GeocodeCache, GeocodeClient, InteractionGraph, TrajectoryRecord,
    VerbTypeMap, DEFAULT_INSTITUTION_KEYWORDS,
};
use lifetraj_core::ingest::load_corpus;
use serde::Deserialize;
use serde_json::json;

use super::{read_jsonl, write_atomic, write_jsonl};

pub const GEOCODER_URL_ENV: &str = "LIFETRAJ_GEOCODER_URL";

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Accepted trajectories (`classify` output; records with label 1 are kept)
    #[arg(long)]
    pub trajectories: PathBuf,
    /// Node-link graph export (JSON)
    #[arg(long)]
    pub out_graph: PathBuf,
    /// Cumulative snapshot years as start:end:step
    #[arg(long)]
    pub snapshots: Option<String>,
    /// Verb lemma → type mapping file
    #[arg(long)]
    pub verb_map: Option<PathBuf>,
    /// Corpus file for resolving pronouns to page titles
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Persistent geocode cache (JSON); without an endpoint, lookups are
    /// cache-only
    #[arg(long)]
    pub geocode_cache: Option<PathBuf>,
    /// Geocoder endpoint; LIFETRAJ_GEOCODER_URL overrides
    #[arg(long)]
    pub geocode_endpoint: Option<String>,
    /// Normalized trajectory records (JSONL)
    #[arg(long)]
    pub out_records: Option<PathBuf>,
    /// Verb-type histogram (JSON)
    #[arg(long)]
    pub out_histogram: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct AcceptedRecord {
    person: String,
    time: String,
    location: String,
    #[serde(default)]
    page_id: String,
    #[serde(default)]
    verb: Option<String>,
    #[serde(default)]
    label: Option<u8>,
}

fn parse_snapshot_spec(spec: &str) -> Result<Vec<i32>> {
    let parts: Vec<&str> = spec.split(':').collect();
    anyhow::ensure!(
        parts.len() == 3,
        "snapshot spec must be start:end:step, got {spec:?}"
    );
    let start: i32 = parts[0].parse().context("snapshot start")?;
    let end: i32 = parts[1].parse().context("snapshot end")?;
    let step: i32 = parts[2].parse().context("snapshot step")?;
    anyhow::ensure!(step > 0 && end >= start, "invalid snapshot range {spec:?}");
    Ok((start..=end).step_by(step as usize).collect())
}

enum Geocoder {
    Off,
    CacheOnly(GeocodeCache),
    Client(Box<GeocodeClient>),
}

impl Geocoder {
    fn lookup(&mut self, location: &str) -> Option<(f64, f64)> {
        match self {
            Geocoder::Off => None,
            Geocoder::CacheOnly(cache) => cache
                .get(&lifetraj_core::analysis::normalize_location(location))
                .flatten(),
            Geocoder::Client(client) => client.geocode(location),
        }
    }

    fn flush(&mut self) -> Result<()> {
        if let Geocoder::Client(client) = self {
            client.flush_cache()?;
        }
        Ok(())
    }
}

pub fn run(args: AnalyzeArgs) -> Result<()> {
    let accepted: Vec<AcceptedRecord> = read_jsonl(&args.trajectories)?
        .into_iter()
        .filter(|r: &AcceptedRecord| r.label.unwrap_or(1) == 1)
        .collect();

    let titles: BTreeMap<String, String> = match &args.corpus {
        Some(path) => load_corpus(path)?
            .filter_map(|r| r.ok())
            .map(|p| (p.page_id, p.title))
            .collect(),
        None => BTreeMap::new(),
    };

    let endpoint = std::env::var(GEOCODER_URL_ENV)
        .ok()
        .or_else(|| args.geocode_endpoint.clone());
    let mut geocoder = match (&args.geocode_cache, endpoint) {
        (Some(cache_path), Some(endpoint)) => Geocoder::Client(Box::new(GeocodeClient::new(
            endpoint,
            GeocodeCache::open(cache_path)?,
        ))),
        (Some(cache_path), None) => Geocoder::CacheOnly(GeocodeCache::open(cache_path)?),
        (None, Some(endpoint)) => {
            Geocoder::Client(Box::new(GeocodeClient::new(endpoint, GeocodeCache::in_memory())))
        }
        (None, None) => Geocoder::Off,
    };

    let verb_map = match &args.verb_map {
        Some(path) => VerbTypeMap::load(path)?,
        None => VerbTypeMap::default(),
    };

    let mut records = Vec::new();
    let mut dropped_vague_time = 0usize;
    for r in &accepted {
        let Some(year) = normalize_time(&r.time) else {
            dropped_vague_time += 1;
            continue;
        };
        let title = titles.get(&r.page_id).cloned().unwrap_or_else(|| {
            if r.page_id.is_empty() {
                r.person.clone()
            } else {
                r.page_id.clone()
            }
        });
        let person_id = resolve_person(&r.person, &title);
        let coords = geocoder.lookup(&r.location);
        let verb_lemma = r.verb.clone().unwrap_or_default().to_lowercase();
        let verb_type = verb_map.lookup(&verb_lemma);
        let record = TrajectoryRecord {
            person_id,
            year,
            location_text: r.location.clone(),
            latitude: coords.map(|c| c.0),
            longitude: coords.map(|c| c.1),
            verb_lemma,
            verb_type,
        };
        record.validate()?;
        records.push(record);
    }
    geocoder.flush()?;
    eprintln!(
        "normalized {} trajectory records ({dropped_vague_time} dropped for vague time)",
        records.len()
    );

    if let Some(path) = &args.out_records {
        write_jsonl(path, &records)?;
    }

    if let Some(path) = &args.out_histogram {
        let with_verbs: Vec<TrajectoryRecord> = records
            .iter()
            .filter(|r| !r.verb_lemma.is_empty())
            .cloned()
            .collect();
        let histogram = verb_histogram(&with_verbs, &verb_map);
        let entries: Vec<serde_json::Value> = histogram
            .iter()
            .map(|(ty, count)| json!({"verb_type": ty, "count": count}))
            .collect();
        write_atomic(path, serde_json::to_string_pretty(&entries)?.as_bytes())?;
    }

    let graph = build_interaction_network(&records, DEFAULT_INSTITUTION_KEYWORDS);
    let scores = pagerank(&graph, 0.85, 1e-8);
    let snapshots = match &args.snapshots {
        Some(spec) => parse_snapshot_spec(spec)?
            .into_iter()
            .map(|year| {
                let s = snapshot(&graph, year);
                json!({"year": year, "nodes": s.node_count(), "edges": s.edge_count()})
            })
            .collect(),
        None => Vec::new(),
    };
    let export = graph_json(&graph, &scores, snapshots);
    write_atomic(&args.out_graph, serde_json::to_string_pretty(&export)?.as_bytes())?;
    eprintln!(
        "interaction network: {} nodes, {} edges -> {}",
        graph.node_count(),
        graph.edge_count(),
        args.out_graph.display()
    );
    Ok(())
}

fn graph_json(
    graph: &InteractionGraph,
    scores: &BTreeMap<String, f64>,
    snapshots: Vec<serde_json::Value>,
) -> serde_json::Value {
    json!({
        "nodes": graph
            .nodes
            .iter()
            .map(|id| json!({"id": id, "pagerank": scores.get(id).copied().unwrap_or(0.0)}))
            .collect::<Vec<_>>(),
        "edges": graph
            .edges
            .iter()
            .map(|e| json!({
                "source": e.source,
                "target": e.target,
                "year": e.year,
                "location": e.location,
            }))
            .collect::<Vec<_>>(),
        "snapshots": snapshots,
    })
}
