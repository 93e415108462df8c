//! Minimal mbox reader: From/To/Subject/Date headers and the plain body.

use chrono::{DateTime, NaiveDateTime};

use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct MailRecord {
    pub sent: NaiveDateTime,
    pub attrs: Vec<(String, Value)>,
}

fn parse_date(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc2822(raw) {
        return Some(dt.naive_local());
    }
    match Value::parse_temporal(raw)? {
        Value::DateTime(dt) => Some(dt),
        _ => None,
    }
}

/// Splits on `From ` separator lines and parses each message.
pub fn parse_mailbox(text: &str) -> Vec<Result<MailRecord, String>> {
    let mut messages: Vec<Vec<&str>> = Vec::new();
    for raw in text.split('\n') {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.starts_with("From ") {
            messages.push(Vec::new());
        } else if let Some(msg) = messages.last_mut() {
            msg.push(line);
        }
    }
    messages.into_iter().map(|m| build(&m)).collect()
}

fn build(lines: &[&str]) -> Result<MailRecord, String> {
    let mut headers: Vec<(String, String)> = Vec::new();
    let mut body_start = lines.len();
    for (i, line) in lines.iter().enumerate() {
        if line.is_empty() {
            body_start = i + 1;
            break;
        }
        if line.starts_with([' ', '\t']) {
            if let Some((_, v)) = headers.last_mut() {
                v.push(' ');
                v.push_str(line.trim());
            }
            continue;
        }
        if let Some((name, value)) = line.split_once(':') {
            headers.push((name.trim().to_ascii_lowercase(), value.trim().to_string()));
        }
    }
    let header = |name: &str| {
        headers
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    };
    let sent = header("date")
        .ok_or("missing Date header")
        .and_then(|d| parse_date(d).ok_or("unparseable Date header"))?;
    let mut attrs = Vec::new();
    if let Some(from) = header("from") {
        attrs.push(("sender".to_string(), Value::text(from)));
    }
    if let Some(to) = header("to") {
        let recipients = to
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(Value::from)
            .collect();
        attrs.push(("recipients".to_string(), Value::List(recipients)));
    }
    if let Some(subject) = header("subject") {
        attrs.push(("subject".to_string(), Value::text(subject)));
    }
    let body: Vec<String> = lines
        .get(body_start..)
        .unwrap_or_default()
        .iter()
        .map(|l| match l.strip_prefix('>') {
            Some(rest) if rest.trim_start_matches('>').starts_with("From ") => rest.to_string(),
            _ => l.to_string(),
        })
        .collect();
    let body = body.join("\n").trim().to_string();
    if !body.is_empty() {
        attrs.push(("body".to_string(), Value::Text(body)));
    }
    Ok(MailRecord { sent, attrs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_messages() {
        let text = "From a@x Mon Jan  1 00:00:00 2024\nFrom: Isabella Ruiz\nTo: Lucia, Carla\nSubject: Halloween was a blast!\nDate: Tue, 1 Nov 2016 10:44:21 +0100\n\nHey Lucia,\n>From the party...\n\nFrom b@x Mon Jan  1 00:00:00 2024\nFrom: Bob\nSubject: no date\n\nbody\n";
        let recs = parse_mailbox(text);
        assert_eq!(recs.len(), 2);
        let first = recs[0].as_ref().unwrap();
        assert_eq!(first.sent.to_string(), "2016-11-01 10:44:21");
        assert!(first.attrs.contains(&(
            "recipients".into(),
            Value::List(vec!["Lucia".into(), "Carla".into()])
        )));
        assert!(first
            .attrs
            .contains(&("body".into(), Value::text("Hey Lucia,\nFrom the party..."))));
        assert!(recs[1].is_err());
    }
}
