//! Immutable, time-ordered event store and its staging builder.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, BufRead, Write};
use std::path::Path;

use crate::event::{Event, EventId, Source};
use crate::ingest::lines;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cannot finalize an empty store")]
    EmptyStore,
    #[error("duplicate event id `{0}`")]
    DuplicateId(EventId),
    #[error("store dump line {line}: {reason}")]
    BadDump { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Staging buffer that collects events before the store is frozen.
#[derive(Debug, Default)]
pub struct StoreBuilder {
    staged: Vec<Event>,
    ids: HashSet<EventId>,
    next_id: usize,
}

impl StoreBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.staged.len()
    }

    pub fn is_empty(&self) -> bool {
        self.staged.is_empty()
    }

    /// Next generated id for records that do not carry one.
    pub(crate) fn fresh_id(&mut self) -> EventId {
        loop {
            self.next_id += 1;
            let id = EventId(format!("e{:06}", self.next_id));
            if !self.ids.contains(&id) {
                return id;
            }
        }
    }

    pub fn contains(&self, id: &EventId) -> bool {
        self.ids.contains(id)
    }

    pub fn push(&mut self, event: Event) -> Result<(), StoreError> {
        if !self.ids.insert(event.id().clone()) {
            return Err(StoreError::DuplicateId(event.id().clone()));
        }
        self.staged.push(event);
        Ok(())
    }

    /// Sorts by `(span.start, id)` and freezes.
    pub fn finalize(self) -> Result<EventStore, StoreError> {
        if self.staged.is_empty() {
            return Err(StoreError::EmptyStore);
        }
        Ok(EventStore::from_events(self.staged))
    }
}

/// Finalized store. Read-only; safe to share across threads.
#[derive(Debug, Clone)]
pub struct EventStore {
    events: Vec<Event>,
    by_source: BTreeMap<Source, Vec<usize>>,
    by_id: HashMap<EventId, usize>,
}

impl EventStore {
    fn from_events(mut events: Vec<Event>) -> Self {
        events.sort_by(|a, b| {
            a.span()
                .start()
                .cmp(&b.span().start())
                .then_with(|| a.id().cmp(b.id()))
        });
        let mut by_source: BTreeMap<Source, Vec<usize>> = BTreeMap::new();
        let mut by_id = HashMap::with_capacity(events.len());
        for (i, e) in events.iter().enumerate() {
            by_source.entry(e.source()).or_default().push(i);
            by_id.insert(e.id().clone(), i);
        }
        EventStore {
            events,
            by_source,
            by_id,
        }
    }

    /// Builds a store directly from events; fails on duplicate ids or empty input.
    pub fn from_vec(events: Vec<Event>) -> Result<Self, StoreError> {
        let mut builder = StoreBuilder::new();
        for e in events {
            builder.push(e)?;
        }
        builder.finalize()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn get(&self, id: &EventId) -> Option<&Event> {
        self.by_id.get(id).map(|&i| &self.events[i])
    }

    pub fn contains(&self, id: &EventId) -> bool {
        self.by_id.contains_key(id)
    }

    /// All events of one source, in time order.
    pub fn events_by_source(&self, source: Source) -> Vec<&Event> {
        self.by_source
            .get(&source)
            .map(|idx| idx.iter().map(|&i| &self.events[i]).collect())
            .unwrap_or_default()
    }

    pub fn sources(&self) -> impl Iterator<Item = Source> + '_ {
        self.by_source.keys().copied()
    }

    /// Canonical dump: one event-lines record per event, in store order.
    pub fn dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.events {
            writeln!(out, "{}", lines::encode_event(e))?;
        }
        Ok(())
    }

    pub fn dump_to_string(&self) -> String {
        let mut buf = Vec::new();
        self.dump(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dump is UTF-8")
    }

    /// Loads a canonical dump; unlike ingestion, any bad line is an error.
    pub fn load<R: BufRead>(input: R) -> Result<Self, StoreError> {
        let mut builder = StoreBuilder::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event =
                lines::decode_record(&line, &mut builder).map_err(|e| StoreError::BadDump {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            builder.push(event)?;
        }
        builder.finalize()
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let file = std::fs::File::open(path)?;
        Self::load(io::BufReader::new(file))
    }
}
