//! Events: key-value dictionaries with a timespan and a source tag.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::value::Value;

/// Keys every event exposes without extraction; derived from its span
/// unless the event carries an explicit attribute of the same name.
pub const BUILTIN_KEYS: [&str; 7] = [
    "source",
    "start_date",
    "start_time",
    "end_date",
    "end_time",
    "start_datetime",
    "end_datetime",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Calendar,
    Mail,
    SocialMedia,
    Note,
    Workout,
    MusicStream,
    MovieStream,
    TvseriesStream,
    OnlinePurchase,
}

impl Source {
    pub const ALL: [Source; 9] = [
        Source::Calendar,
        Source::Mail,
        Source::SocialMedia,
        Source::Note,
        Source::Workout,
        Source::MusicStream,
        Source::MovieStream,
        Source::TvseriesStream,
        Source::OnlinePurchase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Source::Calendar => "calendar",
            Source::Mail => "mail",
            Source::SocialMedia => "social_media",
            Source::Note => "note",
            Source::Workout => "workout",
            Source::MusicStream => "music_stream",
            Source::MovieStream => "movie_stream",
            Source::TvseriesStream => "tvseries_stream",
            Source::OnlinePurchase => "online_purchase",
        }
    }

    /// Sources whose records are natively structured.
    pub fn is_structured(self) -> bool {
        matches!(
            self,
            Source::Workout
                | Source::MusicStream
                | Source::MovieStream
                | Source::TvseriesStream
                | Source::OnlinePurchase
        )
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown source `{0}`")]
pub struct UnknownSource(pub String);

impl FromStr for Source {
    type Err = UnknownSource;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Source::ALL
            .into_iter()
            .find(|src| src.name() == s.trim())
            .ok_or_else(|| UnknownSource(s.to_string()))
    }
}

/// Closed time interval; point events have `start == end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeSpan {
    start: NaiveDateTime,
    end: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("span start {start} is after end {end}")]
pub struct InvertedSpan {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

impl TimeSpan {
    pub fn new(start: NaiveDateTime, end: NaiveDateTime) -> Result<Self, InvertedSpan> {
        if start > end {
            return Err(InvertedSpan { start, end });
        }
        Ok(TimeSpan { start, end })
    }

    pub fn point(at: NaiveDateTime) -> Self {
        TimeSpan { start: at, end: at }
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn end(&self) -> NaiveDateTime {
        self.end
    }

    pub fn length_seconds(&self) -> i64 {
        (self.end - self.start).num_seconds()
    }

    /// True when the two closed intervals share at least one instant.
    pub fn overlaps(&self, other: &TimeSpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// Smallest span enclosing both.
    pub fn enclose(&self, other: &TimeSpan) -> TimeSpan {
        TimeSpan {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub String);

impl EventId {
    pub fn new(id: impl Into<String>) -> Self {
        EventId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Record fields of the event-lines format; never attribute keys.
pub const RESERVED_RECORD_KEYS: [&str; 3] = ["id", "start", "end"];

/// Lowercases and replaces whitespace with underscores.
pub fn normalize_key(raw: &str) -> String {
    raw.trim()
        .chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .flat_map(char::to_lowercase)
        .collect()
}

/// Keys are non-empty and made of lowercase alphanumerics and underscores.
pub fn is_valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c == '_' || c.is_ascii_digit() || (c.is_alphabetic() && !c.is_uppercase()))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventError {
    #[error("invalid attribute key `{0}`")]
    InvalidKey(String),
    #[error("attribute `source` is reserved")]
    ReservedSource,
    #[error("nested list under key `{0}`")]
    NestedList(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    id: EventId,
    source: Source,
    span: TimeSpan,
    attrs: BTreeMap<String, Value>,
    origin: BTreeSet<EventId>,
    misses: BTreeSet<String>,
}

impl Event {
    /// Creates a store event. Keys are normalized; the `source` attribute is
    /// set from the source tag and may not be supplied separately.
    pub fn new(
        id: EventId,
        source: Source,
        span: TimeSpan,
        attrs: impl IntoIterator<Item = (String, Value)>,
    ) -> Result<Self, EventError> {
        let mut map = BTreeMap::new();
        for (key, value) in attrs {
            let key = normalize_key(&key);
            if !is_valid_key(&key) {
                return Err(EventError::InvalidKey(key));
            }
            if RESERVED_RECORD_KEYS.contains(&key.as_str()) {
                return Err(EventError::InvalidKey(key));
            }
            if key == "source" {
                if value.as_text() == Some(source.name()) {
                    continue;
                }
                return Err(EventError::ReservedSource);
            }
            if let Value::List(items) = &value {
                if items.iter().any(|v| matches!(v, Value::List(_))) {
                    return Err(EventError::NestedList(key));
                }
            }
            map.insert(key, value);
        }
        map.insert("source".to_string(), Value::text(source.name()));
        let origin = BTreeSet::from([id.clone()]);
        Ok(Event {
            id,
            source,
            span,
            attrs: map,
            origin,
            misses: BTreeSet::new(),
        })
    }

    pub fn id(&self) -> &EventId {
        &self.id
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn span(&self) -> &TimeSpan {
        &self.span
    }

    pub fn attrs(&self) -> &BTreeMap<String, Value> {
        &self.attrs
    }

    /// Store events this event was derived from (itself for store events).
    pub fn origin(&self) -> &BTreeSet<EventId> {
        &self.origin
    }

    /// Keys whose extraction produced no value.
    pub fn misses(&self) -> &BTreeSet<String> {
        &self.misses
    }

    /// Explicit attribute, falling back to the span-derived built-in keys.
    pub fn get(&self, key: &str) -> Option<Cow<'_, Value>> {
        if let Some(v) = self.attrs.get(key) {
            return Some(Cow::Borrowed(v));
        }
        builtin_value(&self.span, key).map(Cow::Owned)
    }

    pub fn has_key(&self, key: &str) -> bool {
        self.attrs.contains_key(key) || builtin_value(&self.span, key).is_some()
    }

    pub(crate) fn set_attr(&mut self, key: impl Into<String>, value: Value) {
        self.attrs.insert(key.into(), value);
    }

    pub(crate) fn mark_miss(&mut self, key: &str) {
        self.misses.insert(key.to_string());
    }

    pub(crate) fn with_identity(
        mut self,
        id: EventId,
        span: TimeSpan,
        origin: BTreeSet<EventId>,
    ) -> Self {
        self.id = id;
        self.span = span;
        self.origin = origin;
        self
    }
}

fn builtin_value(span: &TimeSpan, key: &str) -> Option<Value> {
    Some(match key {
        "start_date" => Value::Date(span.start.date()),
        "start_time" => Value::Time(span.start.time()),
        "end_date" => Value::Date(span.end.date()),
        "end_time" => Value::Time(span.end.time()),
        "start_datetime" => Value::DateTime(span.start),
        "end_datetime" => Value::DateTime(span.end),
        _ => return None,
    })
}

/// Deterministic `key: value | ...` rendering with keys in lexicographic
/// order. This is the text retrieval scores and value generators read.
pub fn verbalize_event(event: &Event) -> String {
    let mut out = String::new();
    for (i, (key, value)) in event.attrs.iter().enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        out.push_str(key);
        out.push_str(": ");
        out.push_str(&value.to_string());
    }
    out
}

/// Midnight of a date, used when a record gives only a calendar date.
pub fn at_midnight(date: chrono::NaiveDate) -> NaiveDateTime {
    date.and_time(NaiveTime::MIN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn dt(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").unwrap()
    }

    fn event(source: Source, attrs: Vec<(&str, Value)>) -> Event {
        Event::new(
            EventId::new("e1"),
            source,
            TimeSpan::point(dt("2019-01-03T10:00:00")),
            attrs.into_iter().map(|(k, v)| (k.to_string(), v)),
        )
        .unwrap()
    }

    #[test]
    fn verbalizes_sorted_keys() {
        let e = event(Source::Workout, vec![("workout_type", "soccer".into())]);
        assert_eq!(
            verbalize_event(&e),
            "source: workout | workout_type: soccer"
        );
    }

    #[test]
    fn verbalizes_lists_comma_joined() {
        let e = event(
            Source::MusicStream,
            vec![("artists", Value::List(vec!["A".into(), "B".into()]))],
        );
        assert_eq!(verbalize_event(&e), "artists: A, B | source: music_stream");
    }

    #[test]
    fn verbalizes_table_workout() {
        let e = event(
            Source::Workout,
            vec![
                ("workout_type", "soccer".into()),
                ("duration", Value::Int(126)),
                ("duration_unit", "min".into()),
                ("minimum_heart_rate", Value::Int(120)),
                ("maximum_heart_rate", Value::Int(188)),
                ("average_heart_rate", Value::Real(156.87)),
            ],
        );
        let text = verbalize_event(&e);
        assert!(text.contains("maximum_heart_rate: 188"), "{text}");
        assert!(text.contains("average_heart_rate: 156.87"));
        assert_eq!(text, verbalize_event(&e.clone()));
    }

    #[test]
    fn keys_are_normalized() {
        let e = event(Source::Note, vec![("Workout Type", "gym".into())]);
        assert_eq!(e.attrs().get("workout_type"), Some(&Value::text("gym")));
        let bad = Event::new(
            EventId::new("x"),
            Source::Note,
            TimeSpan::point(dt("2019-01-03T10:00:00")),
            vec![("a-b".to_string(), Value::Int(1))],
        );
        assert!(matches!(bad, Err(EventError::InvalidKey(_))));
    }

    #[test]
    fn builtin_keys_derive_from_span() {
        let e = Event::new(
            EventId::new("e"),
            Source::Calendar,
            TimeSpan::new(dt("2024-08-19T12:00:00"), dt("2024-08-19T13:00:00")).unwrap(),
            Vec::new(),
        )
        .unwrap();
        assert_eq!(
            e.get("start_date").unwrap().into_owned(),
            Value::Date(NaiveDate::from_ymd_opt(2024, 8, 19).unwrap())
        );
        assert_eq!(e.get("end_time").unwrap().to_string(), "13:00:00");
        assert_eq!(e.get("source").unwrap().to_string(), "calendar");
        assert!(e.get("location").is_none());
        for key in BUILTIN_KEYS {
            assert!(e.has_key(key));
        }
    }

    #[test]
    fn spans_reject_inversion_and_detect_overlap() {
        let a = TimeSpan::new(dt("2024-01-01T10:00:00"), dt("2024-01-01T11:00:00")).unwrap();
        let b = TimeSpan::new(dt("2024-01-01T11:00:00"), dt("2024-01-01T12:00:00")).unwrap();
        let c = TimeSpan::point(dt("2024-01-01T12:00:01"));
        assert!(a.overlaps(&b));
        assert!(!a.overlaps(&c));
        assert!(TimeSpan::new(b.end(), a.start()).is_err());
        assert_eq!(a.enclose(&c).end(), c.end());
    }
}
