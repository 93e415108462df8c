//! Attribute values carried by events and produced by operators.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde_json::Value as Json;

pub const DATE_FORMAT: &str = "%Y-%m-%d";
pub const TIME_FORMAT: &str = "%H:%M:%S";
pub const DATETIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// A dynamically typed attribute value.
///
/// `Null` marks a missing extraction; `Bool` only arises from predicate
/// evaluation and JSON input. Lists hold scalars only.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Text(String),
    Int(i64),
    Real(f64),
    Date(NaiveDate),
    Time(NaiveTime),
    DateTime(NaiveDateTime),
    /// Whole seconds.
    Duration(i64),
    List(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValueError {
    #[error("list values may only contain scalars")]
    NestedList,
    #[error("unsupported JSON value: {0}")]
    UnsupportedJson(String),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    /// Builds a list value, rejecting nested lists.
    pub fn list(items: Vec<Value>) -> Result<Self, ValueError> {
        if items.iter().any(|v| matches!(v, Value::List(_))) {
            return Err(ValueError::NestedList);
        }
        Ok(Value::List(items))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "bool",
            Value::Text(_) => "str",
            Value::Int(_) => "int",
            Value::Real(_) => "float",
            Value::Date(_) => "date",
            Value::Time(_) => "time",
            Value::DateTime(_) => "datetime",
            Value::Duration(_) => "duration",
            Value::List(_) => "list",
        }
    }

    /// Numeric view used by aggregates and metrics. Durations count as seconds.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            Value::Duration(s) => Some(*s as f64),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Real(_) | Value::Duration(_))
    }

    /// Ordering between comparable values. Numbers compare as reals, dates
    /// promote to midnight when compared with datetimes, texts compare
    /// lexicographically. Incomparable kinds (and nulls) yield `None`.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        use Value::*;
        match (self, other) {
            (Null, _) | (_, Null) => None,
            (Int(a), Int(b)) => Some(a.cmp(b)),
            (Duration(a), Duration(b)) => Some(a.cmp(b)),
            (Int(_) | Real(_), Int(_) | Real(_)) => {
                self.as_f64().unwrap().partial_cmp(&other.as_f64().unwrap())
            }
            (Text(a), Text(b)) => Some(a.cmp(b)),
            (Bool(a), Bool(b)) => Some(a.cmp(b)),
            (Date(a), Date(b)) => Some(a.cmp(b)),
            (Time(a), Time(b)) => Some(a.cmp(b)),
            (DateTime(a), DateTime(b)) => Some(a.cmp(b)),
            (Date(a), DateTime(b)) => Some(a.and_time(NaiveTime::MIN).cmp(b)),
            (DateTime(a), Date(b)) => Some(a.cmp(&b.and_time(NaiveTime::MIN))),
            _ => None,
        }
    }

    /// Equality used by predicates: comparable values that order equal,
    /// otherwise structural equality (lists, mixed kinds).
    pub fn loosely_equals(&self, other: &Value) -> bool {
        match self.compare(other) {
            Some(o) => o == Ordering::Equal,
            None => self == other && !self.is_null(),
        }
    }

    /// Parses the canonical ISO forms of date, time and datetime.
    pub fn parse_temporal(s: &str) -> Option<Value> {
        let s = s.trim();
        let bytes = s.as_bytes();
        let digit = |i: usize| bytes.get(i).is_some_and(u8::is_ascii_digit);
        let date_shape =
            |off: usize| (0..4).all(|i| digit(off + i)) && bytes.get(off + 4) == Some(&b'-');
        if s.len() == 10 && date_shape(0) {
            return NaiveDate::parse_from_str(s, DATE_FORMAT)
                .ok()
                .map(Value::Date);
        }
        if (s.len() == 5 || s.len() == 8) && digit(0) && digit(1) && bytes.get(2) == Some(&b':') {
            let fmt = if s.len() == 5 { "%H:%M" } else { TIME_FORMAT };
            return NaiveTime::parse_from_str(s, fmt).ok().map(Value::Time);
        }
        if s.len() >= 16 && date_shape(0) && matches!(bytes[10], b'T' | b' ') {
            let trimmed = s.trim_end_matches('Z');
            let normalized: String = trimmed
                .char_indices()
                .map(|(i, c)| if i == 10 { 'T' } else { c })
                .collect();
            for fmt in [DATETIME_FORMAT, "%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%S%.f"] {
                if let Ok(dt) = NaiveDateTime::parse_from_str(&normalized, fmt) {
                    return Some(Value::DateTime(dt.with_nanosecond(0).unwrap_or(dt)));
                }
            }
        }
        None
    }

    /// Decodes a value from the self-describing JSON record form.
    ///
    /// Strings in canonical ISO date/time/datetime form become temporal
    /// values; `{"seconds": n}` is a duration.
    pub fn from_json(json: &Json) -> Result<Value, ValueError> {
        Ok(match json {
            Json::Null => Value::Null,
            Json::Bool(b) => Value::Bool(*b),
            Json::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Value::Int(i)
                } else if let Some(f) = n.as_f64() {
                    Value::Real(f)
                } else {
                    return Err(ValueError::UnsupportedJson(n.to_string()));
                }
            }
            Json::String(s) => Value::parse_temporal(s).unwrap_or_else(|| Value::Text(s.clone())),
            Json::Array(items) => {
                let items = items
                    .iter()
                    .map(|j| match j {
                        Json::Array(_) => Err(ValueError::NestedList),
                        other => Value::from_json(other),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Value::List(items)
            }
            Json::Object(map) => match (map.len(), map.get("seconds")) {
                (1, Some(Json::Number(n))) if n.as_i64().is_some() => {
                    Value::Duration(n.as_i64().unwrap())
                }
                _ => return Err(ValueError::UnsupportedJson(json.to_string())),
            },
        })
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Null => Json::Null,
            Value::Bool(b) => Json::Bool(*b),
            Value::Text(s) => Json::String(s.clone()),
            Value::Int(i) => Json::from(*i),
            Value::Real(r) => serde_json::Number::from_f64(*r).map_or(Json::Null, Json::Number),
            Value::Date(_) | Value::Time(_) | Value::DateTime(_) => Json::String(self.to_string()),
            Value::Duration(s) => serde_json::json!({ "seconds": s }),
            Value::List(items) => Json::Array(items.iter().map(Value::to_json).collect()),
        }
    }
}

impl fmt::Display for Value {
    /// Verbalization form: ISO temporals, comma-joined lists.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => f.write_str(s),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Date(d) => write!(f, "{}", d.format(DATE_FORMAT)),
            Value::Time(t) => write!(f, "{}", t.format(TIME_FORMAT)),
            Value::DateTime(dt) => write!(f, "{}", dt.format(DATETIME_FORMAT)),
            Value::Duration(s) => write!(f, "PT{s}S"),
            Value::List(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                Ok(())
            }
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(r: f64) -> Self {
        Value::Real(r)
    }
}

impl From<NaiveDate> for Value {
    fn from(d: NaiveDate) -> Self {
        Value::Date(d)
    }
}

impl From<NaiveTime> for Value {
    fn from(t: NaiveTime) -> Self {
        Value::Time(t)
    }
}

impl From<NaiveDateTime> for Value {
    fn from(dt: NaiveDateTime) -> Self {
        Value::DateTime(dt)
    }
}

/// Hashable wrapper giving values set/map semantics (group-by keys,
/// pattern mining). Integral reals hash like the equal integer.
#[derive(Debug, Clone)]
pub struct ValueKey(pub Value);

impl ValueKey {
    fn canonical(&self) -> CanonicalKey<'_> {
        match &self.0 {
            Value::Real(r) if r.fract() == 0.0 && r.abs() < 9.0e15 => CanonicalKey::Int(*r as i64),
            Value::Real(r) => CanonicalKey::Real(if *r == 0.0 { 0 } else { r.to_bits() }),
            Value::Int(i) => CanonicalKey::Int(*i),
            other => CanonicalKey::Other(other),
        }
    }
}

enum CanonicalKey<'a> {
    Int(i64),
    Real(u64),
    Other(&'a Value),
}

impl PartialEq for ValueKey {
    fn eq(&self, other: &Self) -> bool {
        match (self.canonical(), other.canonical()) {
            (CanonicalKey::Int(a), CanonicalKey::Int(b)) => a == b,
            (CanonicalKey::Real(a), CanonicalKey::Real(b)) => a == b,
            (CanonicalKey::Other(a), CanonicalKey::Other(b)) => match (a, b) {
                (Value::List(x), Value::List(y)) => {
                    x.len() == y.len()
                        && x.iter()
                            .zip(y)
                            .all(|(p, q)| ValueKey(p.clone()) == ValueKey(q.clone()))
                }
                _ => a == b,
            },
            _ => false,
        }
    }
}

impl Eq for ValueKey {}

impl Hash for ValueKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self.canonical() {
            CanonicalKey::Int(i) => {
                0u8.hash(state);
                i.hash(state);
            }
            CanonicalKey::Real(bits) => {
                1u8.hash(state);
                bits.hash(state);
            }
            CanonicalKey::Other(v) => {
                2u8.hash(state);
                v.type_name().hash(state);
                match v {
                    Value::List(items) => {
                        for item in items {
                            ValueKey(item.clone()).hash(state);
                        }
                    }
                    other => other.to_string().hash(state),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temporal_strings_round_trip_through_iso() {
        for s in ["2022-03-14", "12:00:00", "2024-08-19T12:00:00"] {
            let v = Value::parse_temporal(s).unwrap();
            assert_eq!(v.to_string(), s);
        }
        assert_eq!(
            Value::parse_temporal("2016-11-01T10:44:21Z")
                .unwrap()
                .to_string(),
            "2016-11-01T10:44:21"
        );
        assert!(Value::parse_temporal("Lunch at 12").is_none());
        assert!(Value::parse_temporal("2022-13-01").is_none());
    }

    #[test]
    fn json_decoding_types_values() {
        let j: Json = serde_json::json!(["A", "B"]);
        assert_eq!(
            Value::from_json(&j).unwrap(),
            Value::List(vec!["A".into(), "B".into()])
        );
        let nested: Json = serde_json::json!([["A"]]);
        assert_eq!(Value::from_json(&nested), Err(ValueError::NestedList));
        let dur: Json = serde_json::json!({"seconds": 90});
        assert_eq!(Value::from_json(&dur).unwrap(), Value::Duration(90));
        assert_eq!(
            Value::from_json(&serde_json::json!(156.87)).unwrap(),
            Value::Real(156.87)
        );
        assert_eq!(Value::Real(2.0).to_json().to_string(), "2.0");
    }

    #[test]
    fn compare_promotes_dates_against_datetimes() {
        let d = Value::parse_temporal("2022-03-14").unwrap();
        let dt = Value::parse_temporal("2022-03-14T09:00:00").unwrap();
        assert_eq!(d.compare(&dt), Some(Ordering::Less));
        assert_eq!(
            Value::Int(2).compare(&Value::Real(2.0)),
            Some(Ordering::Equal)
        );
        assert_eq!(Value::Null.compare(&Value::Int(1)), None);
        assert_eq!(Value::text("a").compare(&Value::Int(1)), None);
    }

    #[test]
    fn value_keys_unify_integral_reals() {
        use std::collections::HashSet;
        let mut set = HashSet::new();
        set.insert(ValueKey(Value::Int(3)));
        assert!(set.contains(&ValueKey(Value::Real(3.0))));
        assert!(!set.contains(&ValueKey(Value::text("3"))));
    }

    #[test]
    fn lists_display_comma_joined() {
        let v = Value::list(vec!["A".into(), "B".into()]).unwrap();
        assert_eq!(v.to_string(), "A, B");
        assert!(Value::list(vec![v]).is_err());
    }
}
