//! The RETRIEVE operator: lexical candidate scoring, frequent-pattern
//! pruning, per-event classification and cross-source de-duplication.

mod classify;
mod dedup;
mod patterns;
mod scorer;
pub mod text;

use std::sync::Arc;

use rayon::prelude::*;

pub use classify::{
    EventClassifier, HttpClassifier, LexicalClassifier, OracleClassifier, PatternClassifier,
    PATTERN_SAMPLE,
};
pub use dedup::deduplicate;
pub use patterns::{
    apply_pattern_labels, mine_patterns, Label, LabelOutcome, Pattern, PatternKind,
};
pub use scorer::{Bm25, Pool, Scorer};

use crate::event::{verbalize_event, Event};
use crate::plugin::PluginError;
use crate::store::EventStore;

#[derive(Debug, thiserror::Error)]
pub enum RetrieveError {
    #[error("empty retrieval query")]
    EmptyQuery,
    #[error("pattern `{0}` has no label")]
    UnlabeledPattern(String),
    #[error("no gold labels for query `{0}`")]
    NoGold(String),
    #[error("classifier returned unknown label `{0}`")]
    BadLabel(String),
    #[error("oracle file line {line}: expected query<TAB>ids")]
    BadOracle { line: usize },
    #[error("invalid retrieval config: {0}")]
    Config(String),
    #[error(transparent)]
    Plugin(#[from] PluginError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalConfig {
    /// Minimum score after dividing by the pool maximum (exclusive).
    pub score_threshold: f64,
    pub pattern_freq_threshold: f64,
    /// Merge overlapping events from different sources.
    pub dedup: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            score_threshold: 0.1,
            pattern_freq_threshold: 0.05,
            dedup: true,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), RetrieveError> {
        let ok = |x: f64| x > 0.0 && x <= 1.0;
        if !ok(self.score_threshold) {
            return Err(RetrieveError::Config(format!(
                "score_threshold must lie in (0, 1], got {}",
                self.score_threshold
            )));
        }
        if !ok(self.pattern_freq_threshold) {
            return Err(RetrieveError::Config(format!(
                "pattern_freq_threshold must lie in (0, 1], got {}",
                self.pattern_freq_threshold
            )));
        }
        Ok(())
    }
}

/// Candidate indices with normalized score above the threshold, best first
/// (ties by event id). `texts` and `events` are parallel.
pub fn sparse_candidates(
    query: &str,
    events: &[&Event],
    pool: &Pool,
    scorer: &dyn Scorer,
    threshold: f64,
) -> Result<Vec<(usize, f64)>, RetrieveError> {
    if query.trim().is_empty() {
        return Err(RetrieveError::EmptyQuery);
    }
    let raw = scorer.score(query, pool);
    let max = raw.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Ok(Vec::new());
    }
    let mut out: Vec<(usize, f64)> = raw
        .into_iter()
        .enumerate()
        .map(|(i, s)| (i, s / max))
        .filter(|&(_, s)| s > threshold)
        .collect();
    out.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| events[a.0].id().cmp(events[b.0].id()))
    });
    Ok(out)
}

/// Runs the event classifier over every event, in parallel.
pub fn classify_remaining(
    query: &str,
    events: Vec<Event>,
    classifier: &dyn EventClassifier,
) -> Result<Vec<Event>, RetrieveError> {
    let verdicts: Vec<bool> = events
        .par_iter()
        .map(|e| classifier.classify_event(query, e))
        .collect::<Result<_, _>>()?;
    Ok(events
        .into_iter()
        .zip(verdicts)
        .filter(|(_, k)| *k)
        .map(|(e, _)| e)
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetrievalStats {
    pub pool: usize,
    pub candidates: usize,
    pub patterns: usize,
    pub kept_by_pattern: usize,
    pub dropped_by_pattern: usize,
    pub classified: usize,
    pub kept_by_classifier: usize,
    pub output: usize,
}

pub struct Pipeline {
    pub cfg: RetrievalConfig,
    pub scorer: Arc<dyn Scorer>,
    pub pattern_classifier: Arc<dyn PatternClassifier>,
    pub event_classifier: Arc<dyn EventClassifier>,
}

impl Pipeline {
    /// Lexical scorer and lexical classifiers.
    pub fn lexical(cfg: RetrievalConfig) -> Self {
        let lex = Arc::new(LexicalClassifier::default());
        Pipeline {
            cfg,
            scorer: Arc::new(Bm25::default()),
            pattern_classifier: lex.clone(),
            event_classifier: lex,
        }
    }

    pub fn with_classifiers<C>(cfg: RetrievalConfig, classifier: Arc<C>) -> Self
    where
        C: PatternClassifier + EventClassifier + 'static,
    {
        Pipeline {
            cfg,
            scorer: Arc::new(Bm25::default()),
            pattern_classifier: classifier.clone(),
            event_classifier: classifier,
        }
    }

    /// Runs all five steps over `events`, whose verbalizations `pool` indexes.
    pub fn run_on(
        &self,
        query: &str,
        events: &[&Event],
        pool: &Pool,
    ) -> Result<(Vec<Event>, RetrievalStats), RetrieveError> {
        self.cfg.validate()?;
        let mut stats = RetrievalStats {
            pool: events.len(),
            ..Default::default()
        };
        let scored = sparse_candidates(
            query,
            events,
            pool,
            self.scorer.as_ref(),
            self.cfg.score_threshold,
        )?;
        let candidates: Vec<&Event> = scored.iter().map(|&(i, _)| events[i]).collect();
        stats.candidates = candidates.len();
        if candidates.is_empty() {
            return Ok((Vec::new(), stats));
        }

        let patterns = mine_patterns(&candidates, self.cfg.pattern_freq_threshold);
        stats.patterns = patterns.len();
        let labels: Vec<Option<Label>> = patterns
            .par_iter()
            .map(|p| {
                let members: Vec<&Event> = p.members.iter().map(|&m| candidates[m]).collect();
                self.pattern_classifier
                    .classify_pattern(query, p, &members)
                    .map(Some)
            })
            .collect::<Result<_, _>>()?;
        let outcome = apply_pattern_labels(candidates.len(), &patterns, &labels)?;
        stats.kept_by_pattern = outcome.kept.len();
        stats.dropped_by_pattern = outcome.dropped;
        stats.classified = outcome.undecided.len();

        let undecided: Vec<Event> = outcome
            .undecided
            .iter()
            .map(|&i| candidates[i].clone())
            .collect();
        let classified = classify_remaining(query, undecided, self.event_classifier.as_ref())?;
        stats.kept_by_classifier = classified.len();

        let mut kept: Vec<Event> = outcome
            .kept
            .iter()
            .map(|&i| candidates[i].clone())
            .collect();
        kept.extend(classified);
        let out = if self.cfg.dedup {
            deduplicate(kept)
        } else {
            kept.sort_by(|a, b| {
                a.span()
                    .start()
                    .cmp(&b.span().start())
                    .then_with(|| a.id().cmp(b.id()))
            });
            kept
        };
        stats.output = out.len();
        Ok((out, stats))
    }

    /// Runs over an explicit event list, indexing it on the fly.
    pub fn run(
        &self,
        query: &str,
        events: &[Event],
    ) -> Result<(Vec<Event>, RetrievalStats), RetrieveError> {
        let refs: Vec<&Event> = events.iter().collect();
        let pool = Pool::build(&events.iter().map(verbalize_event).collect::<Vec<_>>());
        self.run_on(query, &refs, &pool)
    }
}

/// What the executor needs from retrieval: events for a query, over the
/// whole store or restricted to `input`.
pub trait RetrieveBackend: Send + Sync {
    fn retrieve(&self, query: &str, input: Option<&[Event]>) -> Result<Vec<Event>, RetrieveError>;
}

/// Pipeline over a store, with the store's index built once.
pub struct PipelineBackend {
    store: Arc<EventStore>,
    pool: Pool,
    pipeline: Pipeline,
}

impl PipelineBackend {
    pub fn new(store: Arc<EventStore>, pipeline: Pipeline) -> Self {
        let texts: Vec<String> = store.events().iter().map(verbalize_event).collect();
        PipelineBackend {
            pool: Pool::build(&texts),
            store,
            pipeline,
        }
    }

    pub fn store(&self) -> &EventStore {
        &self.store
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn retrieve_with_stats(
        &self,
        query: &str,
        input: Option<&[Event]>,
    ) -> Result<(Vec<Event>, RetrievalStats), RetrieveError> {
        match input {
            Some(events) => self.pipeline.run(query, events),
            None => {
                let refs: Vec<&Event> = self.store.events().iter().collect();
                self.pipeline.run_on(query, &refs, &self.pool)
            }
        }
    }
}

impl RetrieveBackend for PipelineBackend {
    fn retrieve(&self, query: &str, input: Option<&[Event]>) -> Result<Vec<Event>, RetrieveError> {
        self.retrieve_with_stats(query, input)
            .map(|(events, _)| events)
    }
}

#[cfg(test)]
mod tests;
