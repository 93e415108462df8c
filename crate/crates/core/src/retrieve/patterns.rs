use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::RetrieveError;
use crate::event::{Event, Source};
use crate::value::{Value, ValueKey};

#[derive(Debug, Clone, PartialEq)]
pub enum PatternKind {
    KeyValue { key: String, value: Value },
    WholeSource(Source),
}

/// A frequent key-value pair, or a whole source, over a candidate pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub kind: PatternKind,
    pub support: usize,
    /// Indices into the candidate list, ascending.
    pub members: Vec<usize>,
}

impl Pattern {
    fn sort_key(&self) -> (std::cmp::Reverse<usize>, String, String) {
        let (k, v) = match &self.kind {
            PatternKind::KeyValue { key, value } => (key.clone(), value.to_string()),
            PatternKind::WholeSource(s) => ("source".to_string(), s.name().to_string()),
        };
        (std::cmp::Reverse(self.support), k, v)
    }
}

impl fmt::Display for Pattern {
    /// The text a classifier sees, e.g. `workout_type: gym` or `source: mail`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PatternKind::KeyValue { key, value } => write!(f, "{key}: {value}"),
            PatternKind::WholeSource(s) => write!(f, "source: {s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Relevant,
    Irrelevant,
    Partial,
}

/// Key-value patterns over scalar attributes with support at least
/// `ceil(freq_threshold * n)`, plus one whole-source pattern per source.
/// Ordered by support (descending), then key, then value text.
pub fn mine_patterns(candidates: &[&Event], freq_threshold: f64) -> Vec<Pattern> {
    let n = candidates.len();
    if n == 0 {
        return Vec::new();
    }
    let min_support = ((freq_threshold * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut kv: HashMap<(String, ValueKey), Vec<usize>> = HashMap::new();
    let mut by_source: HashMap<Source, Vec<usize>> = HashMap::new();
    for (i, e) in candidates.iter().enumerate() {
        by_source.entry(e.source()).or_default().push(i);
        for (key, value) in e.attrs() {
            if key == "source" || matches!(value, Value::List(_) | Value::Null) {
                continue;
            }
            kv.entry((key.clone(), ValueKey(value.clone())))
                .or_default()
                .push(i);
        }
    }
    let mut out: Vec<Pattern> = kv
        .into_iter()
        .filter(|(_, members)| members.len() >= min_support)
        .map(|((key, value), members)| Pattern {
            kind: PatternKind::KeyValue {
                key,
                value: value.0,
            },
            support: members.len(),
            members,
        })
        .collect();
    out.extend(by_source.into_iter().map(|(s, members)| Pattern {
        kind: PatternKind::WholeSource(s),
        support: members.len(),
        members,
    }));
    out.sort_by(|a, b| {
        a.sort_key().cmp(&b.sort_key()).then_with(|| {
            // same rendering, different value types (e.g. "1" vs 1)
            let ta = matches!(a.kind, PatternKind::WholeSource(_));
            let tb = matches!(b.kind, PatternKind::WholeSource(_));
            ta.cmp(&tb).then_with(|| a.members.cmp(&b.members))
        })
    });
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelOutcome {
    /// Under at least one relevant pattern; these skip the event classifier.
    pub kept: Vec<usize>,
    /// Only under partial patterns.
    pub undecided: Vec<usize>,
    pub dropped: usize,
}

/// Applies pattern labels. A relevant pattern wins over an irrelevant one,
/// and an irrelevant one over a partial one.
pub fn apply_pattern_labels(
    n_candidates: usize,
    patterns: &[Pattern],
    labels: &[Option<Label>],
) -> Result<LabelOutcome, RetrieveError> {
    let mut relevant = vec![false; n_candidates];
    let mut irrelevant = vec![false; n_candidates];
    for (i, p) in patterns.iter().enumerate() {
        let label = labels
            .get(i)
            .copied()
            .flatten()
            .ok_or_else(|| RetrieveError::UnlabeledPattern(p.to_string()))?;
        for &m in &p.members {
            match label {
                Label::Relevant => relevant[m] = true,
                Label::Irrelevant => irrelevant[m] = true,
                Label::Partial => {}
            }
        }
    }
    let mut out = LabelOutcome::default();
    for i in 0..n_candidates {
        if relevant[i] {
            out.kept.push(i);
        } else if irrelevant[i] {
            out.dropped += 1;
        } else {
            out.undecided.push(i);
        }
    }
    Ok(out)
}
