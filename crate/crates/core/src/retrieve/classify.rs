use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::patterns::{Label, Pattern};
use super::text::token_set;
use super::RetrieveError;
use crate::decompose::normalize_question;
use crate::event::{verbalize_event, Event, EventId};
use crate::plugin::HttpEndpoint;

/// Sample size shown to pattern classifiers.
pub const PATTERN_SAMPLE: usize = 20;

pub trait PatternClassifier: Send + Sync {
    /// `members` are all candidates covered by the pattern, in candidate order.
    fn classify_pattern(
        &self,
        query: &str,
        pattern: &Pattern,
        members: &[&Event],
    ) -> Result<Label, RetrieveError>;
}

pub trait EventClassifier: Send + Sync {
    fn classify_event(&self, query: &str, event: &Event) -> Result<bool, RetrieveError>;
}

/// Content tokens of an event's attribute values (keys are ignored).
fn value_tokens(event: &Event) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for value in event.attrs().values() {
        out.extend(token_set(&value.to_string()));
    }
    out
}

/// Token-overlap heuristic. An event is relevant when it shares at least
/// `min_overlap` content tokens with the query. A pattern is relevant when
/// every sampled member (the first [`PATTERN_SAMPLE`]) is, irrelevant when none is, partial otherwise.
#[derive(Debug, Clone, Copy)]
pub struct LexicalClassifier {
    pub min_overlap: usize,
}

impl Default for LexicalClassifier {
    fn default() -> Self {
        LexicalClassifier { min_overlap: 1 }
    }
}

impl LexicalClassifier {
    fn overlaps(&self, query: &BTreeSet<String>, event: &Event) -> bool {
        value_tokens(event).intersection(query).count() >= self.min_overlap.max(1)
    }
}

impl PatternClassifier for LexicalClassifier {
    fn classify_pattern(
        &self,
        query: &str,
        _pattern: &Pattern,
        members: &[&Event],
    ) -> Result<Label, RetrieveError> {
        let q = token_set(query);
        let sample = &members[..members.len().min(PATTERN_SAMPLE)];
        let hits = sample.iter().filter(|e| self.overlaps(&q, e)).count();
        Ok(if sample.is_empty() || hits == 0 {
            Label::Irrelevant
        } else if hits == sample.len() {
            Label::Relevant
        } else {
            Label::Partial
        })
    }
}

impl EventClassifier for LexicalClassifier {
    fn classify_event(&self, query: &str, event: &Event) -> Result<bool, RetrieveError> {
        Ok(self.overlaps(&token_set(query), event))
    }
}

/// Classifier backed by gold relevance labels. An event is relevant when any
/// store event it derives from is gold for the query.
#[derive(Debug, Clone, Default)]
pub struct OracleClassifier {
    gold: HashMap<String, HashSet<EventId>>,
}

impl OracleClassifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: &str, ids: impl IntoIterator<Item = EventId>) {
        self.gold
            .entry(normalize_question(query))
            .or_default()
            .extend(ids);
    }

    /// Reads `query<TAB>id,id,...` lines.
    pub fn parse(text: &str) -> Result<Self, RetrieveError> {
        let mut oracle = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (q, ids) = line
                .split_once('\t')
                .ok_or_else(|| RetrieveError::BadOracle { line: i + 1 })?;
            oracle.insert(
                q,
                ids.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(EventId::new),
            );
        }
        Ok(oracle)
    }

    /// Inverse of [`OracleClassifier::parse`], sorted by query then id.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&String, Vec<&str>)> = self
            .gold
            .iter()
            .map(|(q, ids)| {
                let mut ids: Vec<&str> = ids.iter().map(EventId::as_str).collect();
                ids.sort_unstable();
                (q, ids)
            })
            .collect();
        rows.sort();
        rows.iter()
            .map(|(q, ids)| format!("{q}\t{}\n", ids.join(",")))
            .collect()
    }

    fn gold(&self, query: &str) -> Result<&HashSet<EventId>, RetrieveError> {
        self.gold
            .get(&normalize_question(query))
            .ok_or_else(|| RetrieveError::NoGold(query.to_string()))
    }

    fn relevant(gold: &HashSet<EventId>, event: &Event) -> bool {
        event.origin().iter().any(|id| gold.contains(id))
    }
}

impl PatternClassifier for OracleClassifier {
    /// Judged on every member, not a sample.
    fn classify_pattern(
        &self,
        query: &str,
        _pattern: &Pattern,
        members: &[&Event],
    ) -> Result<Label, RetrieveError> {
        let gold = self.gold(query)?;
        let hits = members.iter().filter(|e| Self::relevant(gold, e)).count();
        Ok(if hits == 0 {
            Label::Irrelevant
        } else if hits == members.len() {
            Label::Relevant
        } else {
            Label::Partial
        })
    }
}

impl EventClassifier for OracleClassifier {
    fn classify_event(&self, query: &str, event: &Event) -> Result<bool, RetrieveError> {
        Ok(Self::relevant(self.gold(query)?, event))
    }
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    query: &'a str,
    candidate: String,
}

#[derive(Deserialize)]
struct ClassifyResponse {
    label: String,
    #[serde(default)]
    #[allow(dead_code)]
    score: Option<f64>,
}

/// Learned classifier behind the JSON-over-HTTP plug-in contract. Patterns
/// are sent as their `key: value` text followed by sampled member
/// verbalizations, one per line.
#[derive(Debug, Clone)]
pub struct HttpClassifier {
    endpoint: HttpEndpoint,
}

impl HttpClassifier {
    pub fn new(url: impl Into<String>, timeout: Duration, max_retries: usize) -> Self {
        HttpClassifier {
            endpoint: HttpEndpoint::new(url, timeout, max_retries),
        }
    }

    fn ask(&self, query: &str, candidate: String) -> Result<String, RetrieveError> {
        let resp: ClassifyResponse = self.endpoint.call(&ClassifyRequest { query, candidate })?;
        Ok(resp.label.trim().to_ascii_lowercase())
    }
}

impl PatternClassifier for HttpClassifier {
    fn classify_pattern(
        &self,
        query: &str,
        pattern: &Pattern,
        members: &[&Event],
    ) -> Result<Label, RetrieveError> {
        let mut candidate = pattern.to_string();
        for e in members.iter().take(PATTERN_SAMPLE) {
            candidate.push('\n');
            candidate.push_str(&verbalize_event(e));
        }
        match self.ask(query, candidate)?.as_str() {
            "relevant" => Ok(Label::Relevant),
            "irrelevant" => Ok(Label::Irrelevant),
            "partial" | "partially_relevant" => Ok(Label::Partial),
            other => Err(RetrieveError::BadLabel(other.to_string())),
        }
    }
}

impl EventClassifier for HttpClassifier {
    fn classify_event(&self, query: &str, event: &Event) -> Result<bool, RetrieveError> {
        match self.ask(query, verbalize_event(event))?.as_str() {
            "keep" | "relevant" => Ok(true),
            "drop" | "irrelevant" => Ok(false),
            other => Err(RetrieveError::BadLabel(other.to_string())),
        }
    }
}
