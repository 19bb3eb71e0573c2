//! Post-processing of accepted trajectories: person resolution, time
//! normalization, geocoding, verb-type histograms, and the spatio-temporal
//! interaction network.

mod geocode;
mod graph;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::PERSON_PRONOUNS;

pub use geocode::{normalize_location, GeocodeCache, GeocodeClient};
pub use graph::{
    build_interaction_network, pagerank, snapshot, Edge, InteractionGraph,
    DEFAULT_INSTITUTION_KEYWORDS,
};

/// One normalized, optionally geocoded trajectory point.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrajectoryRecord {
    pub person_id: String,
    pub year: i32,
    pub location_text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
    pub verb_lemma: String,
    pub verb_type: String,
}

impl TrajectoryRecord {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2100).contains(&self.year) {
            return Err(Error::Eval(format!("year {} out of range", self.year)));
        }
        if let Some(lat) = self.latitude {
            if !(-90.0..=90.0).contains(&lat) {
                return Err(Error::Eval(format!("latitude {lat} out of range")));
            }
        }
        if let Some(lon) = self.longitude {
            if !(-180.0..=180.0).contains(&lon) {
                return Err(Error::Eval(format!("longitude {lon} out of range")));
            }
        }
        Ok(())
    }
}

/// Canonicalizes a person mention: personal pronouns resolve to the page
/// subject (its title); anything else keeps its surface form. Richer
/// coreference backends plug in behind the same signature.
pub fn resolve_person(person_text: &str, page_title: &str) -> String {
    let lower = person_text.trim().to_lowercase();
    if PERSON_PRONOUNS.contains(&lower.as_str()) {
        page_title.to_string()
    } else {
        person_text.trim().to_string()
    }
}

/// Extracts a year from a time expression: the first 4-digit number in
/// [1, 2100] wins, so ranges resolve to their start year. Vague expressions
/// yield `None`.
pub fn normalize_time(time_text: &str) -> Option<i32> {
    static YEAR: OnceLock<Regex> = OnceLock::new();
    let re = YEAR.get_or_init(|| Regex::new(r"\d{4}").expect("static regex"));
    for m in re.find_iter(time_text) {
        // Reject 4-digit runs embedded in longer numbers.
        let before = time_text[..m.start()].chars().next_back();
        let after = time_text[m.end()..].chars().next();
        if before.is_some_and(|c| c.is_ascii_digit()) || after.is_some_and(|c| c.is_ascii_digit())
        {
            continue;
        }
        let year: i32 = m.as_str().parse().ok()?;
        if (1..=2100).contains(&year) {
            return Some(year);
        }
    }
    None
}

/// Flat verb-lemma → type mapping loaded from a tab- or
/// whitespace-separated file ("lemma<TAB>type" per line, `#` comments).
/// Unmapped lemmas fall into the `other*` bucket.
#[derive(Debug, Clone, Default)]
pub struct VerbTypeMap {
    map: BTreeMap<String, String>,
}

pub const UNMAPPED_VERB_TYPE: &str = "other*";

impl VerbTypeMap {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn parse(text: &str) -> Self {
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            if let (Some(lemma), Some(ty)) = (parts.next(), parts.next()) {
                map.insert(lemma.to_lowercase(), ty.to_string());
            }
        }
        VerbTypeMap { map }
    }

    pub fn lookup(&self, lemma: &str) -> String {
        self.map
            .get(&lemma.to_lowercase())
            .cloned()
            .unwrap_or_else(|| UNMAPPED_VERB_TYPE.to_string())
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Counts records per verb type, descending; ties break alphabetically so
/// the ranking is stable.
pub fn verb_histogram(records: &[TrajectoryRecord], map: &VerbTypeMap) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for record in records {
        *counts.entry(map.lookup(&record.verb_lemma)).or_default() += 1;
    }
    let mut out: Vec<(String, usize)> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
