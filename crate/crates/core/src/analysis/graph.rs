//! The spatio-temporal interaction network: undirected edges between persons
//! whose trajectories share an institution-keyword location in the same
//! year, plus PageRank scores and cumulative decade snapshots.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::geocode::normalize_location;
use super::TrajectoryRecord;

/// Location keywords that mark an interaction-worthy venue.
pub const DEFAULT_INSTITUTION_KEYWORDS: &[&str] =
    &["university", "college", "institute", "school", "academy"];

/// One co-location interaction. Person ids are stored in sorted order so
/// the pair is orientation-free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub year: i32,
    pub location: String,
}

/// Undirected multigraph keyed by person ids; one edge per
/// (pair, year, location).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
}

impl InteractionGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Unique-neighbor adjacency (parallel edges collapse for walks).
    pub fn adjacency(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for node in &self.nodes {
            adj.entry(node.as_str()).or_default();
        }
        for edge in &self.edges {
            adj.entry(edge.source.as_str()).or_default().insert(&edge.target);
            adj.entry(edge.target.as_str()).or_default().insert(&edge.source);
        }
        adj
    }
}

/// Links two persons when they have records at the same normalized location
/// in the same year and the location names an institution keyword. The graph
/// is undirected, self-loop-free, and deduplicated per (pair, year, location).
pub fn build_interaction_network(
    records: &[TrajectoryRecord],
    keywords: &[&str],
) -> InteractionGraph {
    // (normalized location, year) → set of persons
    let mut groups: BTreeMap<(String, i32), BTreeSet<&str>> = BTreeMap::new();
    for record in records {
        let normalized = normalize_location(&record.location_text);
        let institutional = keywords
            .iter()
            .any(|k| normalized.contains(&k.to_lowercase()));
        if !institutional {
            continue;
        }
        groups
            .entry((normalized, record.year))
            .or_default()
            .insert(record.person_id.as_str());
    }
    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    let mut nodes: BTreeSet<String> = BTreeSet::new();
    for ((location, year), persons) in &groups {
        let persons: Vec<&&str> = persons.iter().collect();
        for i in 0..persons.len() {
            for j in (i + 1)..persons.len() {
                let (a, b) = (persons[i].to_string(), persons[j].to_string());
                nodes.insert(a.clone());
                nodes.insert(b.clone());
                edges.insert(Edge {
                    source: a,
                    target: b,
                    year: *year,
                    location: location.clone(),
                });
            }
        }
    }
    InteractionGraph {
        nodes: nodes.into_iter().collect(),
        edges: edges.into_iter().collect(),
    }
}

/// PageRank by power iteration over the collapsed undirected adjacency.
/// Dangling (isolated) nodes redistribute uniformly; scores sum to 1.
pub fn pagerank(
    graph: &InteractionGraph,
    damping: f64,
    tolerance: f64,
) -> BTreeMap<String, f64> {
    let adj = graph.adjacency();
    let nodes: Vec<&str> = adj.keys().copied().collect();
    let n = nodes.len();
    if n == 0 {
        return BTreeMap::new();
    }
    let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let neighbors: Vec<Vec<usize>> = nodes
        .iter()
        .map(|k| adj[k].iter().map(|m| index[m]).collect())
        .collect();
    let mut rank = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let dangling: f64 = (0..n)
            .filter(|&i| neighbors[i].is_empty())
            .map(|i| rank[i])
            .sum();
        let base = (1.0 - damping) / n as f64 + damping * dangling / n as f64;
        let mut next = vec![base; n];
        for i in 0..n {
            if neighbors[i].is_empty() {
                continue;
            }
            let share = damping * rank[i] / neighbors[i].len() as f64;
            for &j in &neighbors[i] {
                next[j] += share;
            }
        }
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        rank = next;
        if delta < tolerance {
            break;
        }
    }
    nodes
        .iter()
        .zip(rank)
        .map(|(k, r)| (k.to_string(), r))
        .collect()
}

/// Cumulative snapshot: all edges dated up to and including `year`, with
/// exactly their endpoints as nodes.
pub fn snapshot(graph: &InteractionGraph, year: i32) -> InteractionGraph {
    let edges: Vec<Edge> = graph
        .edges
        .iter()
        .filter(|e| e.year <= year)
        .cloned()
        .collect();
    let nodes: BTreeSet<String> = edges
        .iter()
        .flat_map(|e| [e.source.clone(), e.target.clone()])
        .collect();
    InteractionGraph {
        nodes: nodes.into_iter().collect(),
        edges,
    }
}
