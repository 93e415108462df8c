//! The EXTRACT operator: typed values for requested keys, resolved by key
//! match, synonyms, a frozen key mapping, or a value generator.

mod frozen;
mod rules;
mod typed;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

pub use frozen::{FrozenMapping, MappingState, FREEZE_THRESHOLD, FREEZE_WINDOW};
pub use rules::{split_verbalization, HttpGenerator, RuleGenerator, UserInfo, ValueGenerator};
pub use typed::{coerce, parse_typed};

use crate::event::{normalize_key, verbalize_event, Event};
use crate::plan::TypeTag;
use crate::plugin::PluginError;

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("{keys} key(s) but {types} type(s)")]
    ArityMismatch { keys: usize, types: usize },
    #[error(transparent)]
    Plugin(#[from] PluginError),
}

/// Requested key to event keys, tried in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymTable {
    map: BTreeMap<String, Vec<String>>,
}

impl Default for SynonymTable {
    fn default() -> Self {
        let mut t = SynonymTable {
            map: BTreeMap::new(),
        };
        for (k, vs) in [
            ("day", &["start_date"][..]),
            ("date", &["start_date"]),
            ("time", &["start_time"]),
            ("start", &["start_datetime"]),
            ("end", &["end_datetime"]),
            ("datetime", &["start_datetime"]),
            ("participants", &["attendees", "recipients"]),
            ("people", &["attendees", "recipients"]),
            ("place", &["location"]),
            (
                "title",
                &[
                    "summary",
                    "subject",
                    "movie_title",
                    "series_title",
                    "song_name",
                ],
            ),
        ] {
            t.insert(k, vs.iter().copied());
        }
        t
    }
}

impl SynonymTable {
    pub fn empty() -> Self {
        SynonymTable {
            map: BTreeMap::new(),
        }
    }

    pub fn insert<S: Into<String>>(&mut self, key: &str, targets: impl IntoIterator<Item = S>) {
        self.map.insert(
            normalize_key(key),
            targets.into_iter().map(Into::into).collect(),
        );
    }

    pub fn lookup(&self, key: &str) -> &[String] {
        self.map.get(key).map(Vec::as_slice).unwrap_or_default()
    }
}

/// How a value was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtractPath {
    Exact,
    Synonym,
    Frozen,
    Generator,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractStats {
    pub exact: usize,
    pub synonym: usize,
    pub frozen: usize,
    pub generator_calls: usize,
    pub misses: usize,
}

impl ExtractStats {
    fn record(&mut self, path: Option<ExtractPath>, called_generator: bool, hit: bool) {
        match path {
            Some(ExtractPath::Exact) => self.exact += 1,
            Some(ExtractPath::Synonym) => self.synonym += 1,
            Some(ExtractPath::Frozen) => self.frozen += 1,
            Some(ExtractPath::Generator) | None => {}
        }
        if called_generator {
            self.generator_calls += 1;
        }
        if !hit {
            self.misses += 1;
        }
    }

    fn absorb(&mut self, other: &ExtractStats) {
        self.exact += other.exact;
        self.synonym += other.synonym;
        self.frozen += other.frozen;
        self.generator_calls += other.generator_calls;
        self.misses += other.misses;
    }
}

pub struct Extractor {
    pub generator: Arc<dyn ValueGenerator>,
    pub synonyms: SynonymTable,
    pub user_info: String,
    /// Disable to force every event through the normal paths.
    pub freeze: bool,
}

impl Default for Extractor {
    fn default() -> Self {
        Extractor {
            generator: Arc::new(RuleGenerator),
            synonyms: SynonymTable::default(),
            user_info: String::new(),
            freeze: true,
        }
    }
}

struct Resolved {
    value: Option<crate::value::Value>,
    path: Option<ExtractPath>,
    /// Event key the raw value came from, for mapping tallies.
    source_key: Option<String>,
    called_generator: bool,
}

impl Extractor {
    fn resolve(
        &self,
        event: &Event,
        key: &str,
        tag: TypeTag,
        frozen: Option<&str>,
    ) -> Result<Resolved, ExtractError> {
        let present = |k: &str| event.get(k).filter(|v| !v.is_null());
        if let Some(fk) = frozen {
            if let Some(v) = present(fk) {
                return Ok(Resolved {
                    value: coerce(&v, tag),
                    path: Some(ExtractPath::Frozen),
                    source_key: Some(fk.to_string()),
                    called_generator: false,
                });
            }
        }
        if let Some(v) = present(key) {
            return Ok(Resolved {
                value: coerce(&v, tag),
                path: Some(ExtractPath::Exact),
                source_key: Some(key.to_string()),
                called_generator: false,
            });
        }
        for syn in self.synonyms.lookup(key) {
            if let Some(v) = present(syn) {
                return Ok(Resolved {
                    value: coerce(&v, tag),
                    path: Some(ExtractPath::Synonym),
                    source_key: Some(syn.clone()),
                    called_generator: false,
                });
            }
        }
        let raw = self
            .generator
            .generate(key, &verbalize_event(event), &self.user_info)?;
        let source_key = raw.as_deref().and_then(|r| {
            event
                .attrs()
                .iter()
                .find(|(_, v)| v.to_string() == r)
                .map(|(k, _)| k.clone())
        });
        Ok(Resolved {
            value: raw.as_deref().and_then(|r| parse_typed(r, tag)),
            path: Some(ExtractPath::Generator),
            source_key,
            called_generator: true,
        })
    }

    fn apply(&self, event: &mut Event, key: &str, r: &Resolved) {
        match &r.value {
            Some(v) => event.set_attr(key, v.clone()),
            None => {
                event.set_attr(key, crate::value::Value::Null);
                event.mark_miss(key);
            }
        }
    }

    /// Augments every event with the requested keys. `mappings` holds one
    /// frozen mapping per key and persists across calls of the same node.
    pub fn extract(
        &self,
        events: Vec<Event>,
        keys: &[String],
        types: &[TypeTag],
        mappings: &mut FrozenMapping,
    ) -> Result<(Vec<Event>, ExtractStats), ExtractError> {
        if keys.len() != types.len() {
            return Err(ExtractError::ArityMismatch {
                keys: keys.len(),
                types: types.len(),
            });
        }
        let keys: Vec<String> = keys.iter().map(|k| normalize_key(k)).collect();
        let mut stats = ExtractStats::default();
        let mut events = events;
        // events are handled in order while any mapping still observes; the
        // rest only read decided mappings and run in parallel
        let mut split = 0;
        while split < events.len() && self.freeze && keys.iter().any(|k| mappings.is_observing(k)) {
            let event = &mut events[split];
            for (key, &tag) in keys.iter().zip(types) {
                let frozen = if self.freeze {
                    mappings.frozen_key(key)
                } else {
                    None
                };
                let r = self.resolve(event, key, tag, frozen.as_deref())?;
                if self.freeze && r.path != Some(ExtractPath::Frozen) {
                    mappings.observe(key, r.source_key.as_deref());
                }
                stats.record(r.path, r.called_generator, r.value.is_some());
                self.apply(event, key, &r);
            }
            split += 1;
        }
        let frozen: Vec<Option<String>> = keys
            .iter()
            .map(|k| {
                if self.freeze {
                    mappings.frozen_key(k)
                } else {
                    None
                }
            })
            .collect();
        let rest: Vec<ExtractStats> = events[split..]
            .par_iter_mut()
            .map(|event| {
                let mut s = ExtractStats::default();
                for ((key, &tag), fk) in keys.iter().zip(types).zip(&frozen) {
                    let r = self.resolve(event, key, tag, fk.as_deref())?;
                    s.record(r.path, r.called_generator, r.value.is_some());
                    self.apply(event, key, &r);
                }
                Ok(s)
            })
            .collect::<Result<_, ExtractError>>()?;
        for s in &rest {
            stats.absorb(s);
        }
        Ok((events, stats))
    }
}
