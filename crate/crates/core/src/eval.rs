//! Answer extraction from free-form model output and accuracy reports.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qa::{AnswerKey, Instance, Options};
use crate::taskgen::Category;

pub const MATCHER_URL_ENV: &str = "INTERLEAF_MATCHER_URL";
pub const MATCHER_KEY_ENV: &str = "INTERLEAF_MATCHER_KEY";
pub const MATCHER_TIMEOUT_ENV: &str = "INTERLEAF_MATCHER_TIMEOUT_MS";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction for unknown question id {0}")]
    UnknownQuestionId(String),
    #[error("more than one prediction for {0}")]
    DuplicatePrediction(String),
    #[error("external matcher not configured: set {MATCHER_URL_ENV}")]
    MatcherNotConfigured,
}

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("matching service timed out")]
    Timeout,
    #[error("matching service unreachable: {0}")]
    Transport(String),
    #[error("malformed matching-service response: {0}")]
    MalformedResponse(String),
}

/// Model output as read from a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPrediction {
    pub question_id: String,
    pub output: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMethod {
    Rule,
    External,
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub raw_output: String,
    pub extracted: Option<AnswerKey>,
    pub method: MatchMethod,
}

impl Prediction {
    fn new(question_id: &str, raw: &str, m: (Option<AnswerKey>, MatchMethod)) -> Self {
        Prediction {
            question_id: question_id.to_string(),
            raw_output: raw.to_string(),
            extracted: m.0,
            method: m.1,
        }
    }
}

fn is_word(c: Option<char>) -> bool {
    c.is_some_and(|c| c.is_alphanumeric() || c == '_')
}

/// Standalone A-D tokens with a flag for an "answer is" / "answer:" cue.
fn key_tokens(raw: &str) -> Vec<(AnswerKey, bool)> {
    let mut out = Vec::new();
    for (i, c) in raw.char_indices() {
        let Some(key) = AnswerKey::from_letter(c) else { continue };
        let before = raw[..i].chars().next_back();
        let after = raw[i + 1..].chars().next();
        if is_word(before) || is_word(after) {
            continue;
        }
        // A bare lowercase "a" is the article unless it is marked as a label.
        if c == 'a' && before != Some('(') && !matches!(after, Some(')') | Some(':')) && raw.trim() != "a" {
            continue;
        }
        let lead = raw[..i].trim_end_matches(|c: char| c.is_whitespace() || c == '(').to_lowercase();
        let lead = lead.trim_end_matches(':').trim_end();
        let cued = lead.ends_with("answer is") || lead.ends_with("answer") || lead.ends_with("answer would be");
        out.push((key, cued));
    }
    out
}

fn unique<T: PartialEq + Copy>(items: impl IntoIterator<Item = T>) -> Result<Option<T>, ()> {
    let mut found = None;
    for x in items {
        match found {
            None => found = Some(x),
            Some(y) if y == x => {}
            Some(_) => return Err(()),
        }
    }
    Ok(found)
}

fn contains_token(haystack: &str, needle: &str) -> bool {
    !needle.is_empty()
        && haystack.match_indices(needle).any(|(i, _)| {
            !is_word(haystack[..i].chars().next_back()) && !is_word(haystack[i + needle.len()..].chars().next())
        })
}

/// Rule cascade: key-letter tokens, then unique option-text containment.
pub fn match_answer(raw: &str, options: &Options) -> (Option<AnswerKey>, MatchMethod) {
    let tokens = key_tokens(raw);
    let cued = tokens.iter().filter(|t| t.1).map(|t| t.0);
    let claimed = match unique(cued) {
        Ok(Some(k)) => Ok(Some(k)),
        Ok(None) => unique(tokens.iter().map(|t| t.0)),
        Err(()) => Err(()),
    };
    match claimed {
        Ok(Some(k)) => return (Some(k), MatchMethod::Rule),
        Err(()) => return (None, MatchMethod::Unmatched),
        Ok(None) => {}
    }
    let lower = raw.to_lowercase();
    let hits: Vec<AnswerKey> = options
        .iter()
        .filter(|(_, text)| contains_token(&lower, &text.trim().to_lowercase()))
        .map(|(k, _)| k)
        .collect();
    match hits.as_slice() {
        [k] => (Some(*k), MatchMethod::Rule),
        _ => (None, MatchMethod::Unmatched),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatcherConfig {
    pub url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    /// Concurrent requests in flight.
    pub max_in_flight: usize,
}

impl MatcherConfig {
    pub fn new(url: impl Into<String>) -> Self {
        MatcherConfig {
            url: url.into(),
            api_key: None,
            timeout: Duration::from_secs(20),
            max_in_flight: 4,
        }
    }

    pub fn from_env() -> Result<Self, EvalError> {
        let url = std::env::var(MATCHER_URL_ENV).map_err(|_| EvalError::MatcherNotConfigured)?;
        let mut cfg = MatcherConfig::new(url);
        cfg.api_key = std::env::var(MATCHER_KEY_ENV).ok();
        if let Some(ms) = std::env::var(MATCHER_TIMEOUT_ENV).ok().and_then(|v| v.parse().ok()) {
            cfg.timeout = Duration::from_millis(ms);
        }
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct MatchRequest<'a> {
    question: &'a str,
    options: &'a Options,
    raw_output: &'a str,
}

#[derive(Deserialize)]
struct MatchResponse {
    key: String,
}

/// HTTP client for an answer-matching service.
pub struct ExternalMatcher {
    config: MatcherConfig,
    agent: ureq::Agent,
}

impl ExternalMatcher {
    pub fn new(config: MatcherConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        ExternalMatcher { config, agent }
    }

    pub fn config(&self) -> &MatcherConfig {
        &self.config
    }

    /// `Ok(None)` when the service answers "none".
    pub fn request(&self, question: &str, options: &Options, raw: &str) -> Result<Option<AnswerKey>, MatcherError> {
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let body = MatchRequest {
            question,
            options,
            raw_output: raw,
        };
        let mut resp = req.send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(_) => MatcherError::Timeout,
            other => MatcherError::Transport(other.to_string()),
        })?;
        let parsed: MatchResponse = resp.body_mut().read_json().map_err(|e| match e {
            ureq::Error::Timeout(_) => MatcherError::Timeout,
            other => MatcherError::MalformedResponse(other.to_string()),
        })?;
        let key = parsed.key.trim();
        if key.eq_ignore_ascii_case("none") {
            return Ok(None);
        }
        let mut chars = key.chars();
        match (chars.next().and_then(AnswerKey::from_letter), chars.next()) {
            (Some(k), None) => Ok(Some(k)),
            _ => Err(MatcherError::MalformedResponse(format!("unexpected key {key:?}"))),
        }
    }

    /// Service verdict, or the rule-based result if the call fails.
    pub fn match_answer(&self, question: &str, options: &Options, raw: &str) -> (Option<AnswerKey>, MatchMethod) {
        match self.request(question, options, raw) {
            Ok(Some(k)) => (Some(k), MatchMethod::External),
            Ok(None) => (None, MatchMethod::Unmatched),
            Err(e) => {
                log::warn!("{e}; falling back to rule-based matching");
                match_answer(raw, options)
            }
        }
    }
}

/// Extract a key from every raw output. Outputs for unknown ids are errors.
pub fn match_predictions(
    gold: &[Instance],
    raw: &[RawPrediction],
    external: Option<&ExternalMatcher>,
) -> Result<Vec<Prediction>, EvalError> {
    let by_id: HashMap<&str, &Instance> = gold.iter().map(|g| (g.id.as_str(), g)).collect();
    let mut seen = HashSet::new();
    for r in raw {
        if !by_id.contains_key(r.question_id.as_str()) {
            return Err(EvalError::UnknownQuestionId(r.question_id.clone()));
        }
        if !seen.insert(r.question_id.as_str()) {
            return Err(EvalError::DuplicatePrediction(r.question_id.clone()));
        }
    }
    let one = |r: &RawPrediction| {
        let inst = by_id[r.question_id.as_str()];
        let m = match external {
            Some(ext) => ext.match_answer(&inst.question, &inst.options, &r.output),
            None => match_answer(&r.output, &inst.options),
        };
        Prediction::new(&r.question_id, &r.output, m)
    };
    match external {
        None => Ok(raw.iter().map(one).collect()),
        Some(ext) => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(ext.config().max_in_flight.max(1))
                .build()
                .expect("thread pool");
            Ok(pool.install(|| raw.par_iter().map(one).collect()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl Tally {
    fn new(correct: usize, total: usize) -> Self {
        Tally {
            correct,
            total,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub overall: Tally,
    pub per_category: BTreeMap<Category, Tally>,
    /// Gold items with no extracted key, including missing predictions.
    pub unmatched: usize,
}

/// Accuracy over every gold item; a missing prediction counts as unmatched.
pub fn score(predictions: &[Prediction], gold: &[Instance]) -> Result<ScoreReport, EvalError> {
    let gold_ids: HashSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in predictions {
        if !gold_ids.contains(p.question_id.as_str()) {
            return Err(EvalError::UnknownQuestionId(p.question_id.clone()));
        }
        if by_id.insert(&p.question_id, p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.question_id.clone()));
        }
    }
    let mut counts: BTreeMap<Category, (usize, usize)> = BTreeMap::new();
    let mut unmatched = 0;
    for g in gold {
        let key = by_id.get(g.id.as_str()).and_then(|p| p.extracted);
        unmatched += key.is_none() as usize;
        let c = counts.entry(g.category).or_default();
        c.0 += (key == Some(g.answer)) as usize;
        c.1 += 1;
    }
    let correct = counts.values().map(|c| c.0).sum();
    Ok(ScoreReport {
        overall: Tally::new(correct, gold.len()),
        per_category: counts.into_iter().map(|(k, (c, t))| (k, Tally::new(c, t))).collect(),
        unmatched,
    })
}

impl ScoreReport {
    /// Aligned plain-text table.
    pub fn table(&self) -> String {
        let mut out = format!("{:<12} {:>8} {:>8} {:>9}\n", "category", "correct", "total", "accuracy");
        let rows = self
            .per_category
            .iter()
            .map(|(c, t)| (c.name(), t))
            .chain(std::iter::once(("overall", &self.overall)));
        for (name, t) in rows {
            let _ = writeln!(out, "{:<12} {:>8} {:>8} {:>9.4}", name, t.correct, t.total, t.accuracy);
        }
        let _ = writeln!(out, "unmatched: {}", self.unmatched);
        out
    }
}
