//! Gold relevance: which canonical events a retrieval query asks for, and
//! the observable events rendering them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::canonical::{CanonicalEvent, EventKind};
use super::verbalize::Observable;
use crate::decompose::normalize_question;
use crate::event::{Event, EventId};
use crate::retrieve::{OracleClassifier, RetrieveBackend, RetrieveError};
use crate::value::Value;

/// A set of canonical events a query denotes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Kind(EventKind),
    /// Events of a kind whose attribute equals `value`, or whose list
    /// attribute contains it.
    Attr {
        kind: EventKind,
        key: String,
        value: String,
    },
}

/// Query wording per kind.
const KIND_QUERIES: &[(EventKind, &str)] = &[
    (EventKind::Music, "my music streams"),
    (EventKind::Movie, "my movie streams"),
    (EventKind::TvEpisode, "my TV series streams"),
    (EventKind::Purchase, "my online purchases"),
    (EventKind::Workout, "my workouts"),
    (EventKind::Meeting, "my meetings"),
    (EventKind::DoctorAppointment, "my doctor appointments"),
    (EventKind::Trip, "my trips"),
    (EventKind::Anniversary, "my anniversaries"),
    (EventKind::Milestone, "my milestones"),
];

/// Query wording for attribute selectors: kind, key, prefix, suffix.
const ATTR_QUERIES: &[(EventKind, &str, &str, &str)] = &[
    (EventKind::Music, "artist", "my music streams by ", ""),
    (EventKind::Movie, "genre", "my ", " movie streams"),
    (
        EventKind::TvEpisode,
        "tvseries_title",
        "my TV series streams of ",
        "",
    ),
    (
        EventKind::Purchase,
        "category",
        "my online purchases of ",
        "",
    ),
    (EventKind::Workout, "workout_type", "my ", " workouts"),
    (EventKind::Meeting, "participants", "my meetings with ", ""),
    (
        EventKind::DoctorAppointment,
        "specialty",
        "my doctor appointments with a ",
        "",
    ),
    (EventKind::Trip, "country", "my trips to ", ""),
    (EventKind::Anniversary, "person", "my anniversaries of ", ""),
    (EventKind::Milestone, "title", "I started as ", ""),
];

impl Selector {
    pub fn attr(kind: EventKind, key: &str, value: impl Into<String>) -> Self {
        Selector::Attr {
            kind,
            key: key.to_string(),
            value: value.into(),
        }
    }

    pub fn kind(&self) -> EventKind {
        match self {
            Selector::Kind(k) | Selector::Attr { kind: k, .. } => *k,
        }
    }

    /// Attribute keys that have a query wording, per kind.
    pub fn attr_key(kind: EventKind) -> &'static str {
        ATTR_QUERIES
            .iter()
            .find(|q| q.0 == kind)
            .map(|q| q.1)
            .expect("every kind has one")
    }

    pub fn query(&self) -> String {
        match self {
            Selector::Kind(k) => KIND_QUERIES
                .iter()
                .find(|q| q.0 == *k)
                .expect("every kind has one")
                .1
                .to_string(),
            Selector::Attr { kind, key, value } => {
                let (_, _, pre, post) = ATTR_QUERIES
                    .iter()
                    .find(|q| q.0 == *kind && q.1 == key)
                    .expect("selector built from the table");
                format!("{pre}{value}{post}")
            }
        }
    }

    /// Inverse of [`Selector::query`].
    pub fn from_query(query: &str) -> Option<Selector> {
        let q = query.trim();
        if let Some((k, _)) = KIND_QUERIES.iter().find(|(_, text)| *text == q) {
            return Some(Selector::Kind(*k));
        }
        ATTR_QUERIES.iter().find_map(|&(kind, key, pre, post)| {
            let value = q.strip_prefix(pre)?.strip_suffix(post)?;
            (!value.is_empty()).then(|| Selector::attr(kind, key, value))
        })
    }

    pub fn matches(&self, c: &CanonicalEvent) -> bool {
        match self {
            Selector::Kind(k) => c.kind == *k,
            Selector::Attr { kind, key, value } => {
                c.kind == *kind
                    && match c.attrs.get(key) {
                        Some(Value::List(items)) => {
                            items.iter().any(|v| v.as_text() == Some(value))
                        }
                        Some(v) => v.as_text() == Some(value),
                        None => false,
                    }
            }
        }
    }
}

/// Observable↔canonical links of one persona.
#[derive(Debug, Clone, Default)]
pub struct GoldIndex {
    by_canonical: BTreeMap<EventId, Vec<EventId>>,
}

impl GoldIndex {
    pub fn new(observables: &[Observable]) -> Self {
        let mut by_canonical: BTreeMap<EventId, Vec<EventId>> = BTreeMap::new();
        for o in observables {
            by_canonical
                .entry(o.canonical.clone())
                .or_default()
                .push(o.event.id().clone());
        }
        GoldIndex { by_canonical }
    }

    pub fn from_links(links: impl IntoIterator<Item = (EventId, EventId)>) -> Self {
        let mut by_canonical: BTreeMap<EventId, Vec<EventId>> = BTreeMap::new();
        for (obs, canon) in links {
            by_canonical.entry(canon).or_default().push(obs);
        }
        GoldIndex { by_canonical }
    }

    pub fn observables_of(&self, canonical: &EventId) -> &[EventId] {
        self.by_canonical.get(canonical).map_or(&[], Vec::as_slice)
    }

    /// Gold observable ids for a selector.
    pub fn gold(&self, selector: &Selector, canonical: &[CanonicalEvent]) -> BTreeSet<EventId> {
        canonical
            .iter()
            .filter(|c| selector.matches(c))
            .flat_map(|c| self.observables_of(&c.id).iter().cloned())
            .collect()
    }

    /// Oracle classifier answering the given queries.
    pub fn oracle<'a>(
        &self,
        queries: impl IntoIterator<Item = &'a str>,
        canonical: &[CanonicalEvent],
    ) -> OracleClassifier {
        let mut oracle = OracleClassifier::new();
        for q in queries {
            if let Some(sel) = Selector::from_query(q) {
                oracle.insert(q, self.gold(&sel, canonical));
            }
        }
        oracle
    }
}

/// Every query wording that has gold events for a persona: one per kind
/// plus one per attribute value present.
pub fn all_queries(canonical: &[CanonicalEvent]) -> Vec<String> {
    let mut selectors: BTreeSet<Selector> = BTreeSet::new();
    for c in canonical {
        selectors.insert(Selector::Kind(c.kind));
        let key = Selector::attr_key(c.kind);
        match c.attrs.get(key) {
            Some(Value::List(items)) => {
                for v in items.iter().filter_map(Value::as_text) {
                    selectors.insert(Selector::attr(c.kind, key, v));
                }
            }
            Some(v) => {
                if let Some(t) = v.as_text() {
                    selectors.insert(Selector::attr(c.kind, key, t));
                }
            }
            None => {}
        }
    }
    selectors.iter().map(Selector::query).collect()
}

/// Perfect retrieval over canonical events, used to compute gold answers.
pub struct CanonicalBackend {
    events: Vec<(CanonicalEvent, Event)>,
}

impl CanonicalBackend {
    pub fn new(canonical: &[CanonicalEvent]) -> Self {
        CanonicalBackend {
            events: canonical
                .iter()
                .map(|c| (c.clone(), c.to_event()))
                .collect(),
        }
    }
}

impl RetrieveBackend for CanonicalBackend {
    fn retrieve(&self, query: &str, input: Option<&[Event]>) -> Result<Vec<Event>, RetrieveError> {
        let sel =
            Selector::from_query(query).ok_or_else(|| RetrieveError::NoGold(query.to_string()))?;
        let hits: BTreeSet<&EventId> = self
            .events
            .iter()
            .filter(|(c, _)| sel.matches(c))
            .map(|(c, _)| &c.id)
            .collect();
        Ok(match input {
            Some(events) => events
                .iter()
                .filter(|e| hits.contains(e.id()))
                .cloned()
                .collect(),
            None => self
                .events
                .iter()
                .filter(|(c, _)| hits.contains(&c.id))
                .map(|(_, e)| e.clone())
                .collect(),
        })
    }
}

/// Gold observable ids per normalized query.
pub type GoldTable = HashMap<String, BTreeSet<EventId>>;

pub fn gold_table(
    queries: &[String],
    index: &GoldIndex,
    canonical: &[CanonicalEvent],
) -> GoldTable {
    queries
        .iter()
        .filter_map(|q| {
            Selector::from_query(q).map(|s| (normalize_question(q), index.gold(&s, canonical)))
        })
        .collect()
}
