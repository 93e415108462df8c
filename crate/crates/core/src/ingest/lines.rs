//! Event-lines format: one JSON object per line with `source`, `start`,
//! optional `end` and `id`, and the remaining fields as attributes.

use serde_json::{Map, Value as Json};

use crate::event::{at_midnight, normalize_key, Event, EventId, Source, TimeSpan};
use crate::store::StoreBuilder;
use crate::value::{Value, DATETIME_FORMAT};

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("not a JSON object: {0}")]
    NotAnObject(String),
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("field `{field}` is not a date or datetime: {value}")]
    BadTimestamp { field: &'static str, value: String },
    #[error(transparent)]
    UnknownSource(#[from] crate::event::UnknownSource),
    #[error(transparent)]
    Span(#[from] crate::event::InvertedSpan),
    #[error(transparent)]
    Value(#[from] crate::value::ValueError),
    #[error(transparent)]
    Event(#[from] crate::event::EventError),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("field `id` must be a string, got {0}")]
    BadId(String),
}

fn timestamp(
    obj: &Map<String, Json>,
    field: &'static str,
) -> Result<Option<chrono::NaiveDateTime>, RecordError> {
    let Some(raw) = obj.get(field) else {
        return Ok(None);
    };
    let bad = || RecordError::BadTimestamp {
        field,
        value: raw.to_string(),
    };
    let text = raw.as_str().ok_or_else(bad)?;
    match Value::parse_temporal(text) {
        Some(Value::DateTime(dt)) => Ok(Some(dt)),
        Some(Value::Date(d)) => Ok(Some(at_midnight(d))),
        _ => Err(bad()),
    }
}

/// Decodes one record. Records without an `id` get a fresh one from the builder.
pub fn decode_record(line: &str, builder: &mut StoreBuilder) -> Result<Event, RecordError> {
    let json: Json =
        serde_json::from_str(line).map_err(|e| RecordError::NotAnObject(e.to_string()))?;
    let Json::Object(obj) = json else {
        return Err(RecordError::NotAnObject(line.chars().take(40).collect()));
    };
    let source: Source = obj
        .get("source")
        .and_then(Json::as_str)
        .ok_or(RecordError::Missing("source"))?
        .parse()?;
    let start = timestamp(&obj, "start")?.ok_or(RecordError::Missing("start"))?;
    let end = timestamp(&obj, "end")?.unwrap_or(start);
    let span = TimeSpan::new(start, end)?;
    let id = match obj.get("id") {
        Some(Json::String(s)) => {
            let id = EventId::new(s.clone());
            if builder.contains(&id) {
                return Err(RecordError::DuplicateId(s.clone()));
            }
            id
        }
        Some(other) => return Err(RecordError::BadId(other.to_string())),
        None => builder.fresh_id(),
    };
    let mut attrs = Vec::with_capacity(obj.len());
    for (key, raw) in &obj {
        if matches!(key.as_str(), "source" | "start" | "end" | "id") {
            continue;
        }
        attrs.push((normalize_key(key), Value::from_json(raw)?));
    }
    Ok(Event::new(id, source, span, attrs)?)
}

/// Canonical single-line encoding; keys sorted, record fields first.
pub fn encode_event(event: &Event) -> String {
    let mut out = String::from("{");
    let mut field = |key: &str, value: Json, first: bool| {
        if !first {
            out.push(',');
        }
        out.push_str(&Json::String(key.to_string()).to_string());
        out.push(':');
        out.push_str(&value.to_string());
    };
    field("id", Json::String(event.id().to_string()), true);
    field(
        "source",
        Json::String(event.source().name().to_string()),
        false,
    );
    let fmt = |dt: chrono::NaiveDateTime| Json::String(dt.format(DATETIME_FORMAT).to_string());
    field("start", fmt(event.span().start()), false);
    field("end", fmt(event.span().end()), false);
    for (key, value) in event.attrs() {
        if key == "source" {
            continue;
        }
        field(key, value.to_json(), false);
    }
    out.push('}');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_point_event_with_generated_id() {
        let mut b = StoreBuilder::new();
        let e = decode_record(
            r#"{"source":"workout","start":"2019-01-03T10:00:00","workout_type":"soccer","Max HR":188}"#,
            &mut b,
        )
        .unwrap();
        assert_eq!(e.span().start(), e.span().end());
        assert_eq!(e.attrs()["max_hr"], Value::Int(188));
        assert_eq!(e.id().as_str(), "e000001");
    }

    #[test]
    fn rejects_missing_source_and_inverted_span() {
        let mut b = StoreBuilder::new();
        assert!(matches!(
            decode_record(r#"{"start":"2019-01-03"}"#, &mut b),
            Err(RecordError::Missing("source"))
        ));
        assert!(matches!(
            decode_record(
                r#"{"source":"mail","start":"2019-01-03T10:00:00","end":"2019-01-03T09:00:00"}"#,
                &mut b
            ),
            Err(RecordError::Span(_))
        ));
        assert!(decode_record(r#"{"source":"mail","start":"yesterday"}"#, &mut b).is_err());
        assert!(decode_record("[1,2]", &mut b).is_err());
    }

    #[test]
    fn encoding_is_canonical() {
        let mut b = StoreBuilder::new();
        let line =
            r#"{"source":"music_stream","start":"2024-01-01","artists":["B","A"],"id":"m1"}"#;
        let e = decode_record(line, &mut b).unwrap();
        assert_eq!(
            encode_event(&e),
            r#"{"id":"m1","source":"music_stream","start":"2024-01-01T00:00:00","end":"2024-01-01T00:00:00","artists":["B","A"]}"#
        );
    }
}
