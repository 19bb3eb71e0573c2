//! Geocoding client with a persistent on-disk cache and a 1 request/second
//! rate limit. Cache hits never touch the network.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Deserialize;

use crate::error::{Error, Result};

/// JSON cache file: normalized query → `[lat, lon]` or `null` for queries
/// known to be unresolvable.
#[derive(Debug, Default)]
pub struct GeocodeCache {
    entries: BTreeMap<String, Option<(f64, f64)>>,
    path: Option<PathBuf>,
    dirty: bool,
}

impl GeocodeCache {
    pub fn in_memory() -> Self {
        GeocodeCache::default()
    }

    pub fn open(path: &Path) -> Result<Self> {
        let entries = if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text)?
        } else {
            BTreeMap::new()
        };
        Ok(GeocodeCache {
            entries,
            path: Some(path.to_path_buf()),
            dirty: false,
        })
    }

    pub fn get(&self, query: &str) -> Option<Option<(f64, f64)>> {
        self.entries.get(query).copied()
    }

    pub fn insert(&mut self, query: String, coords: Option<(f64, f64)>) {
        self.entries.insert(query, coords);
        self.dirty = true;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the cache back if it changed. Ordered map keeps the file
    /// byte-stable.
    pub fn flush(&mut self) -> Result<()> {
        if let (true, Some(path)) = (self.dirty, self.path.as_ref()) {
            let text = serde_json::to_string_pretty(&self.entries)?;
            fs::write(path, text).map_err(|e| Error::io(path, e))?;
            self.dirty = false;
        }
        Ok(())
    }
}

/// Lowercased, punctuation-stripped, whitespace-collapsed location key used
/// for both the cache and co-location matching.
pub fn normalize_location(text: &str) -> String {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Deserialize)]
struct GeocodeHit {
    lat: String,
    lon: String,
}

/// The standard open geocoding interface: GET `?q=<query>&format=json`
/// returning a JSON list whose entries carry "lat"/"lon" strings.
pub struct GeocodeClient {
    endpoint: String,
    cache: GeocodeCache,
    min_interval: Duration,
    last_request: Option<Instant>,
    retries: usize,
    client: reqwest::blocking::Client,
}

impl GeocodeClient {
    pub fn new(endpoint: impl Into<String>, cache: GeocodeCache) -> Self {
        GeocodeClient {
            endpoint: endpoint.into(),
            cache,
            min_interval: Duration::from_secs(1),
            last_request: None,
            retries: 2,
            client: reqwest::blocking::Client::new(),
        }
    }

    /// Loosens the rate limit; tests against local mocks use this.
    pub fn with_min_interval(mut self, interval: Duration) -> Self {
        self.min_interval = interval;
        self
    }

    pub fn cache(&self) -> &GeocodeCache {
        &self.cache
    }

    pub fn flush_cache(&mut self) -> Result<()> {
        self.cache.flush()
    }

    fn wait_for_slot(&mut self) {
        if let Some(last) = self.last_request {
            let elapsed = last.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        self.last_request = Some(Instant::now());
    }

    /// First-result coordinates for a location string; `None` when the
    /// service has no match or stays unreachable through the retries.
    /// Results are cached by normalized query; hits bypass the network and
    /// the rate limiter entirely.
    pub fn geocode(&mut self, location_text: &str) -> Option<(f64, f64)> {
        let query = normalize_location(location_text);
        if query.is_empty() {
            return None;
        }
        if let Some(cached) = self.cache.get(&query) {
            return cached;
        }
        let mut outcome = None;
        for attempt in 0..=self.retries {
            self.wait_for_slot();
            match self.fetch(&query) {
                Ok(coords) => {
                    outcome = coords;
                    break;
                }
                Err(e) => {
                    log::warn!("geocode attempt {} for {query:?} failed: {e}", attempt + 1);
                    if attempt == self.retries {
                        // Unreachable service: report none but do not poison
                        // the cache with a permanent miss.
                        return None;
                    }
                }
            }
        }
        self.cache.insert(query, outcome);
        outcome
    }

    fn fetch(&self, query: &str) -> Result<Option<(f64, f64)>> {
        let response = self
            .client
            .get(&self.endpoint)
            .query(&[("q", query), ("format", "json")])
            .send()?
            .error_for_status()?;
        let hits: Vec<GeocodeHit> = response.json()?;
        let Some(first) = hits.first() else {
            return Ok(None);
        };
        let lat: f64 = first
            .lat
            .parse()
            .map_err(|_| Error::Annotate(format!("bad latitude {:?}", first.lat)))?;
        let lon: f64 = first
            .lon
            .parse()
            .map_err(|_| Error::Annotate(format!("bad longitude {:?}", first.lon)))?;
        Ok(Some((lat, lon)))
    }
}
