use std::sync::LazyLock;

use regex::Regex;

use crate::plan::TypeTag;
use crate::value::Value;

static NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^[$€£¥]?\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)\s*(?:[A-Za-z$€£¥%]{1,4})?$",
    )
    .unwrap()
});

fn number(raw: &str) -> Option<f64> {
    let caps = NUMBER.captures(raw.trim())?;
    caps[1].parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Parses extracted text under a type tag. `None` means the text does not
/// denote a value of that type.
pub fn parse_typed(raw: &str, tag: TypeTag) -> Option<Value> {
    let s = raw.trim();
    if s.is_empty() {
        return None;
    }
    match tag {
        TypeTag::Str => Some(Value::text(s)),
        TypeTag::Float => number(s).map(Value::Real),
        TypeTag::Int => {
            let x = number(s)?;
            (x.fract() == 0.0 && x.abs() < 9.0e15).then_some(Value::Int(x as i64))
        }
        TypeTag::Date => match Value::parse_temporal(s)? {
            Value::Date(d) => Some(Value::Date(d)),
            Value::DateTime(dt) => Some(Value::Date(dt.date())),
            _ => None,
        },
        TypeTag::Time => match Value::parse_temporal(s)? {
            Value::Time(t) => Some(Value::Time(t)),
            Value::DateTime(dt) => Some(Value::Time(dt.time())),
            _ => None,
        },
        TypeTag::DateTime => match Value::parse_temporal(s)? {
            Value::DateTime(dt) => Some(Value::DateTime(dt)),
            Value::Date(d) => Some(Value::DateTime(crate::event::at_midnight(d))),
            _ => None,
        },
        TypeTag::List => Some(Value::List(
            s.split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(Value::text)
                .collect(),
        )),
    }
}

/// Converts an attribute value to a tag, reparsing its text when the
/// types disagree.
pub fn coerce(value: &Value, tag: TypeTag) -> Option<Value> {
    match (value, tag) {
        (Value::Null, _) => None,
        (Value::Text(s), _) => parse_typed(s, tag),
        (Value::Int(_), TypeTag::Int) | (Value::Real(_), TypeTag::Float) => Some(value.clone()),
        (Value::Int(n), TypeTag::Float) => Some(Value::Real(*n as f64)),
        (Value::Real(x), TypeTag::Int) => {
            (x.fract() == 0.0 && x.abs() < 9.0e15).then_some(Value::Int(*x as i64))
        }
        (Value::Date(_), TypeTag::Date)
        | (Value::Time(_), TypeTag::Time)
        | (Value::DateTime(_), TypeTag::DateTime) => Some(value.clone()),
        (Value::DateTime(dt), TypeTag::Date) => Some(Value::Date(dt.date())),
        (Value::DateTime(dt), TypeTag::Time) => Some(Value::Time(dt.time())),
        (Value::Date(d), TypeTag::DateTime) => Some(Value::DateTime(crate::event::at_midnight(*d))),
        (Value::List(_), TypeTag::List) => Some(value.clone()),
        (other, TypeTag::List) => Some(Value::List(vec![other.clone()])),
        (Value::List(items), TypeTag::Str) => Some(Value::text(
            items
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(", "),
        )),
        (other, TypeTag::Str) => Some(Value::text(other.to_string())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    #[test]
    fn typed_parsing() {
        assert_eq!(
            parse_typed("2022-03-14", TypeTag::Date),
            Some(Value::Date(NaiveDate::from_ymd_opt(2022, 3, 14).unwrap()))
        );
        assert_eq!(
            parse_typed("5.99 EUR", TypeTag::Float),
            Some(Value::Real(5.99))
        );
        assert_eq!(parse_typed("$12", TypeTag::Int), Some(Value::Int(12)));
        assert_eq!(parse_typed("12.5", TypeTag::Int), None);
        assert_eq!(parse_typed("not a date", TypeTag::Date), None);
        assert_eq!(parse_typed("five euros", TypeTag::Float), None);
        assert_eq!(
            parse_typed("A, B,", TypeTag::List),
            Some(Value::List(vec![Value::text("A"), Value::text("B")]))
        );
        assert_eq!(parse_typed("  ", TypeTag::Str), None);
    }
}
