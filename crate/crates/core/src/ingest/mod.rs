//! Export ingestion into a [`StoreBuilder`]. Malformed records are skipped and
//! counted; only an unreadable file is an error.

use std::path::Path;
use std::str::FromStr;

use crate::event::{Event, Source, TimeSpan};
use crate::store::StoreBuilder;
use crate::value::Value;

pub mod ics;
pub mod lines;
pub mod mbox;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestFormat {
    EventLines,
    CalendarFile,
    MailboxFile,
}

#[derive(Debug, thiserror::Error)]
#[error("unknown export format `{0}` (expected event-lines, ics or mbox)")]
pub struct UnknownFormat(pub String);

impl FromStr for IngestFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "event-lines" | "lines" | "jsonl" => Ok(IngestFormat::EventLines),
            "ics" | "calendar" => Ok(IngestFormat::CalendarFile),
            "mbox" | "mail" => Ok(IngestFormat::MailboxFile),
            _ => Err(UnknownFormat(s.to_string())),
        }
    }
}

impl IngestFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Some(IngestFormat::EventLines),
            "ics" => Some(IngestFormat::CalendarFile),
            "mbox" => Some(IngestFormat::MailboxFile),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub added: usize,
    pub skipped: usize,
    /// One `(record number, reason)` per skipped record.
    pub reasons: Vec<(usize, String)>,
}

impl IngestReport {
    fn skip(&mut self, record: usize, reason: impl Into<String>) {
        self.skipped += 1;
        self.reasons.push((record, reason.into()));
    }
}

#[derive(Debug, thiserror::Error)]
#[error("cannot read {path}: {source}")]
pub struct UnreadableFile {
    pub path: String,
    #[source]
    pub source: std::io::Error,
}

pub fn ingest_export(
    builder: &mut StoreBuilder,
    path: impl AsRef<Path>,
    format: IngestFormat,
) -> Result<IngestReport, UnreadableFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| UnreadableFile {
        path: path.display().to_string(),
        source,
    })?;
    Ok(ingest_text(builder, &text, format))
}

pub fn ingest_text(builder: &mut StoreBuilder, text: &str, format: IngestFormat) -> IngestReport {
    let mut report = IngestReport::default();
    match format {
        IngestFormat::EventLines => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match lines::decode_record(line, builder) {
                    Ok(event) => push(builder, &mut report, i + 1, event),
                    Err(e) => report.skip(i + 1, e.to_string()),
                }
            }
        }
        IngestFormat::CalendarFile => {
            for (i, rec) in ics::parse_calendar(text).into_iter().enumerate() {
                let rec = match rec {
                    Ok(r) => r,
                    Err(reason) => {
                        report.skip(i + 1, reason);
                        continue;
                    }
                };
                let end = rec.end.unwrap_or(rec.start);
                add_parsed(
                    builder,
                    &mut report,
                    i + 1,
                    Source::Calendar,
                    rec.start,
                    end,
                    rec.attrs,
                );
            }
        }
        IngestFormat::MailboxFile => {
            for (i, rec) in mbox::parse_mailbox(text).into_iter().enumerate() {
                match rec {
                    Ok(r) => add_parsed(
                        builder,
                        &mut report,
                        i + 1,
                        Source::Mail,
                        r.sent,
                        r.sent,
                        r.attrs,
                    ),
                    Err(reason) => report.skip(i + 1, reason),
                }
            }
        }
    }
    report
}

fn add_parsed(
    builder: &mut StoreBuilder,
    report: &mut IngestReport,
    record: usize,
    source: Source,
    start: chrono::NaiveDateTime,
    end: chrono::NaiveDateTime,
    attrs: Vec<(String, Value)>,
) {
    let span = match TimeSpan::new(start, end) {
        Ok(s) => s,
        Err(e) => return report.skip(record, e.to_string()),
    };
    let id = builder.fresh_id();
    match Event::new(id, source, span, attrs) {
        Ok(event) => push(builder, report, record, event),
        Err(e) => report.skip(record, e.to_string()),
    }
}

fn push(builder: &mut StoreBuilder, report: &mut IngestReport, record: usize, event: Event) {
    match builder.push(event) {
        Ok(()) => report.added += 1,
        Err(e) => report.skip(record, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_lines_are_skipped_not_fatal() {
        let mut b = StoreBuilder::new();
        let text = "{\"source\":\"note\",\"start\":\"2024-01-01\",\"text\":\"hi\"}\nnot json\n\n{\"source\":\"nope\",\"start\":\"2024-01-01\"}\n";
        let report = ingest_text(&mut b, text, IngestFormat::EventLines);
        assert_eq!(report.added, 1);
        assert_eq!(report.skipped, 2);
        assert_eq!(report.reasons[0].0, 2);
        assert_eq!(report.reasons[1].0, 4);
    }

    #[test]
    fn missing_file_is_an_error() {
        let mut b = StoreBuilder::new();
        assert!(ingest_export(
            &mut b,
            "/definitely/not/here.jsonl",
            IngestFormat::EventLines
        )
        .is_err());
    }

    #[test]
    fn format_names() {
        assert_eq!(
            "ICS".parse::<IngestFormat>().unwrap(),
            IngestFormat::CalendarFile
        );
        assert!("csv".parse::<IngestFormat>().is_err());
    }
}
