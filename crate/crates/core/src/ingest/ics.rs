//! Minimal iCalendar reader: VEVENT blocks with SUMMARY, DESCRIPTION,
//! LOCATION, DTSTART and DTEND.

use chrono::{Duration, NaiveDate, NaiveDateTime};

use crate::event::at_midnight;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct CalendarRecord {
    pub start: NaiveDateTime,
    pub end: Option<NaiveDateTime>,
    pub attrs: Vec<(String, Value)>,
}

/// Joins folded lines (continuations start with a space or tab).
fn unfold(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for raw in text.split('\n') {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(rest) = line.strip_prefix([' ', '\t']) {
            if let Some(last) = out.last_mut() {
                last.push_str(rest);
                continue;
            }
        }
        out.push(line.to_string());
    }
    out
}

fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n' | 'N') => out.push('\n'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Parses `DTSTART`/`DTEND` values; the flag reports a date-only value.
fn parse_stamp(params: &str, value: &str) -> Option<(NaiveDateTime, bool)> {
    let value = value.trim().trim_end_matches('Z');
    if params.contains("VALUE=DATE") && !params.contains("VALUE=DATE-TIME") || value.len() == 8 {
        let d = NaiveDate::parse_from_str(value, "%Y%m%d").ok()?;
        return Some((at_midnight(d), true));
    }
    NaiveDateTime::parse_from_str(value, "%Y%m%dT%H%M%S")
        .ok()
        .map(|dt| (dt, false))
}

/// Parses all VEVENT blocks. Malformed events come back as `Err` with a reason
/// so the caller can count skips.
pub fn parse_calendar(text: &str) -> Vec<Result<CalendarRecord, String>> {
    let mut records = Vec::new();
    let mut current: Option<Vec<(String, String, String)>> = None;
    for line in unfold(text) {
        let upper = line.trim().to_ascii_uppercase();
        if upper == "BEGIN:VEVENT" {
            current = Some(Vec::new());
            continue;
        }
        if upper == "END:VEVENT" {
            if let Some(props) = current.take() {
                records.push(build(props));
            }
            continue;
        }
        let Some(props) = current.as_mut() else {
            continue;
        };
        let Some((head, value)) = line.split_once(':') else {
            continue;
        };
        let (name, params) = head.split_once(';').unwrap_or((head, ""));
        props.push((
            name.trim().to_ascii_uppercase(),
            params.to_ascii_uppercase(),
            value.to_string(),
        ));
    }
    if current.is_some() {
        records.push(Err("unterminated VEVENT".to_string()));
    }
    records
}

fn build(props: Vec<(String, String, String)>) -> Result<CalendarRecord, String> {
    let mut start = None;
    let mut end = None;
    let mut attrs = Vec::new();
    for (name, params, value) in props {
        match name.as_str() {
            "DTSTART" => {
                start = Some(parse_stamp(&params, &value).ok_or(format!("bad DTSTART `{value}`"))?)
            }
            "DTEND" => {
                end = Some(parse_stamp(&params, &value).ok_or(format!("bad DTEND `{value}`"))?)
            }
            "SUMMARY" | "DESCRIPTION" | "LOCATION" => {
                attrs.push((name.to_ascii_lowercase(), Value::Text(unescape(&value))));
            }
            _ => {}
        }
    }
    let (start, _) = start.ok_or("missing DTSTART")?;
    // all-day DTEND is exclusive
    let end = end.map(|(dt, date_only)| {
        if date_only && dt > start {
            dt - Duration::seconds(1)
        } else {
            dt
        }
    });
    Ok(CalendarRecord { start, end, attrs })
}
