//! External-LLM annotation assistant: a two-stage extract-then-verify
//! protocol that bootstraps positive labels from target sentences.
//!
//! Stage 1 samples the extraction prompt several times at a high temperature
//! and unions the parsed triplets; stage 2 re-asks a deterministic
//! verification question per triplet and keeps only confirmed ones. The
//! protocol only ever produces positive labels.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::context::{DatasetRecord, Example, ExampleSource};
use crate::error::{Error, Result};
use crate::ingest::Sentence;

/// Environment variable holding the API key for the HTTP client.
pub const API_KEY_ENV: &str = "LIFETRAJ_API_KEY";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatRequest {
    pub prompt: String,
    pub temperature: f64,
}

/// A chat-completion endpoint. The HTTP implementation talks to any
/// OpenAI-style `/chat/completions` service; tests substitute mocks.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String>;
}

/// Prompt templates loaded from external files. `{{sentence}}` and
/// `{{triplet}}` are substituted at call time; the response format the
/// model is instructed to follow lives in the template text itself.
#[derive(Debug, Clone)]
pub struct PromptTemplates {
    pub extract: String,
    pub verify: String,
}

impl PromptTemplates {
    pub fn load(extract_path: &Path, verify_path: &Path) -> Result<Self> {
        let extract = fs::read_to_string(extract_path).map_err(|e| Error::io(extract_path, e))?;
        let verify = fs::read_to_string(verify_path).map_err(|e| Error::io(verify_path, e))?;
        Ok(PromptTemplates { extract, verify })
    }

    fn extraction_prompt(&self, sentence: &str) -> String {
        self.extract.replace("{{sentence}}", sentence)
    }

    fn verification_prompt(&self, sentence: &str, triplet: &(String, String, String)) -> String {
        self.verify
            .replace("{{sentence}}", sentence)
            .replace(
                "{{triplet}}",
                &format!("({}; {}; {})", triplet.0, triplet.1, triplet.2),
            )
    }
}

/// Protocol knobs: sampled extraction trials and the two temperatures.
#[derive(Debug, Clone)]
pub struct AnnotationJob {
    pub extraction_trials: usize,
    pub extraction_temperature: f64,
    pub verification_temperature: f64,
    /// Maximum in-flight sentences.
    pub concurrency: usize,
}

impl Default for AnnotationJob {
    fn default() -> Self {
        AnnotationJob {
            extraction_trials: 3,
            extraction_temperature: 0.8,
            verification_temperature: 0.0,
            concurrency: 1,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct AnnotationStats {
    pub sentences: usize,
    pub extracted: usize,
    pub verified: usize,
    pub unparseable_responses: usize,
    pub failed_sentences: usize,
}

/// Parses a delimited triplet list: one `(person; time; location)` per line.
/// Lines that do not match are ignored; a lone `NONE` yields nothing.
pub fn parse_triplets(response: &str) -> Vec<(String, String, String)> {
    let re = Regex::new(r"^\s*\(([^;()]+);([^;()]+);([^;()]+)\)\s*$").expect("static regex");
    let mut out = Vec::new();
    for line in response.lines() {
        if let Some(caps) = re.captures(line) {
            out.push((
                caps[1].trim().to_string(),
                caps[2].trim().to_string(),
                caps[3].trim().to_string(),
            ));
        }
    }
    out
}

fn is_affirmative(response: &str) -> bool {
    response.trim().to_lowercase().starts_with("yes")
}

fn annotate_sentence(
    sentence: &Sentence,
    client: &dyn ChatClient,
    templates: &PromptTemplates,
    job: &AnnotationJob,
    stats: &mut AnnotationStats,
) -> Result<Vec<Example>> {
    // Stage 1: sampled extraction, union over trials.
    let mut candidates: BTreeSet<(String, String, String)> = BTreeSet::new();
    for _ in 0..job.extraction_trials {
        let response = client.complete(&ChatRequest {
            prompt: templates.extraction_prompt(&sentence.text),
            temperature: job.extraction_temperature,
        })?;
        let parsed = parse_triplets(&response);
        if parsed.is_empty() && !response.to_uppercase().contains("NONE") {
            stats.unparseable_responses += 1;
            log::warn!(
                "unparseable extraction response for {}/{}/{}",
                sentence.page_id,
                sentence.paragraph_index,
                sentence.sentence_index
            );
        }
        candidates.extend(parsed);
    }
    stats.extracted += candidates.len();

    // Stage 2: deterministic verification per candidate.
    let mut examples = Vec::new();
    for triplet in candidates {
        let response = client.complete(&ChatRequest {
            prompt: templates.verification_prompt(&sentence.text, &triplet),
            temperature: job.verification_temperature,
        })?;
        if is_affirmative(&response) {
            stats.verified += 1;
            examples.push(Example {
                person: triplet.0,
                time: triplet.1,
                location: triplet.2,
                context: sentence.tokens.clone(),
                label: Some(1),
                source: ExampleSource::Llm,
                page_id: Some(sentence.page_id.clone()),
            });
        }
    }
    Ok(examples)
}

/// Runs the two-stage protocol over target sentences. Per-sentence failures
/// are counted and skipped; the output carries only verified positives.
pub fn annotate(
    sentences: &[Sentence],
    client: &dyn ChatClient,
    templates: &PromptTemplates,
    job: &AnnotationJob,
) -> (Vec<Example>, AnnotationStats) {
    let mut stats = AnnotationStats {
        sentences: sentences.len(),
        ..Default::default()
    };
    let mut examples = Vec::new();
    if job.concurrency <= 1 || sentences.len() <= 1 {
        for sentence in sentences {
            match annotate_sentence(sentence, client, templates, job, &mut stats) {
                Ok(batch) => examples.extend(batch),
                Err(e) => {
                    stats.failed_sentences += 1;
                    log::warn!(
                        "annotation failed for {}/{}/{}: {e}",
                        sentence.page_id,
                        sentence.paragraph_index,
                        sentence.sentence_index
                    );
                }
            }
        }
    } else {
        // Bounded fan-out: chunks of `concurrency` sentences run in parallel.
        for chunk in sentences.chunks(job.concurrency) {
            let results: Vec<(Result<Vec<Example>>, AnnotationStats)> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|sentence| {
                        s.spawn(move || {
                            let mut local = AnnotationStats::default();
                            let r = annotate_sentence(sentence, client, templates, job, &mut local);
                            (r, local)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("annotation worker")).collect()
            });
            for (result, local) in results {
                stats.extracted += local.extracted;
                stats.verified += local.verified;
                stats.unparseable_responses += local.unparseable_responses;
                match result {
                    Ok(batch) => examples.extend(batch),
                    Err(e) => {
                        stats.failed_sentences += 1;
                        log::warn!("annotation failed: {e}");
                    }
                }
            }
        }
    }
    (examples, stats)
}

/// Converts annotated examples to dataset records (the sentence text stands
/// in as the paragraph).
pub fn to_dataset_records(examples: &[Example], sentences: &[Sentence]) -> Vec<DatasetRecord> {
    examples
        .iter()
        .map(|e| {
            let paragraph = sentences
                .iter()
                .find(|s| {
                    Some(&s.page_id) == e.page_id.as_ref()
                        && s.tokens == e.context
                })
                .map(|s| s.text.clone())
                .unwrap_or_else(|| e.context.join(" "));
            DatasetRecord {
                person: e.person.clone(),
                time: e.time.clone(),
                location: e.location.clone(),
                label: e.label,
                paragraph,
                page_id: e.page_id.clone().unwrap_or_default(),
                source: Some(ExampleSource::Llm),
            }
        })
        .collect()
}

/// Blocking HTTP client for OpenAI-style chat-completion endpoints, with
/// bounded retries and exponential backoff.
pub struct HttpChatClient {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    retries: usize,
    backoff: Duration,
    client: reqwest::blocking::Client,
}

impl HttpChatClient {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpChatClient {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            retries: 3,
            backoff: Duration::from_millis(500),
            client: reqwest::blocking::Client::new(),
        }
    }

    pub fn with_retries(mut self, retries: usize, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    fn call_once(&self, request: &ChatRequest) -> Result<String> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        });
        let mut builder = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send()?.error_for_status()?;
        let value: serde_json::Value = response.json()?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| Error::Annotate("response missing choices[0].message.content".into()))
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let mut last_err = None;
        for attempt in 0..self.retries.max(1) {
            match self.call_once(request) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    log::warn!("chat request attempt {} failed: {e}", attempt + 1);
                    last_err = Some(e);
                    if attempt + 1 < self.retries.max(1) {
                        std::thread::sleep(self.backoff * (attempt as u32 + 1));
                    }
                }
            }
        }
        Err(last_err.expect("at least one attempt"))
    }
}
