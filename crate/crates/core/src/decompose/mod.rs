//! Recursive question decomposition: a decomposer maps a (sub-)question to a
//! partial plan whose QUD leaves are expanded until none remain.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::plan::{parse_plan, render_plan, NodePath, ParseError, PlanNode};

mod client;

pub use client::GeneratorClient;

pub const DEFAULT_MAX_DEPTH: usize = 12;

/// One earlier step of the current branch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HistoryTurn {
    #[serde(rename = "q")]
    pub question: String,
    pub plan: String,
}

#[derive(Debug, thiserror::Error)]
pub enum DecomposeError {
    #[error("decomposition deeper than {max_depth} at {question:?}")]
    DepthExceeded { max_depth: usize, question: String },
    #[error("plan for {question:?} does not parse ({error}): {raw}")]
    UnparseablePlan {
        question: String,
        raw: String,
        error: ParseError,
    },
    #[error("no scripted plan for {0:?}")]
    DecomposerMiss(String),
    #[error("script line {line}: {reason}")]
    BadScript { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Plugin(#[from] crate::plugin::PluginError),
}

/// Maps a question plus the history of its ancestor steps to partial-plan text.
pub trait Decomposer: Send + Sync {
    fn step(&self, question: &str, history: &[HistoryTurn]) -> Result<String, DecomposeError>;
}

/// Trims, collapses whitespace and lowercases.
pub fn normalize_question(q: &str) -> String {
    q.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Fixed question → plan table.
#[derive(Debug, Clone, Default)]
pub struct ScriptedDecomposer {
    script: HashMap<String, String>,
}

impl ScriptedDecomposer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<Q: AsRef<str>, P: Into<String>>(
        pairs: impl IntoIterator<Item = (Q, P)>,
    ) -> Self {
        let mut s = Self::new();
        for (q, p) in pairs {
            s.insert(q.as_ref(), p);
        }
        s
    }

    pub fn insert(&mut self, question: &str, plan: impl Into<String>) {
        self.script
            .insert(normalize_question(question), plan.into());
    }

    pub fn len(&self) -> usize {
        self.script.len()
    }

    pub fn is_empty(&self) -> bool {
        self.script.is_empty()
    }

    /// Parses `question<TAB>plan` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, DecomposeError> {
        let mut s = Self::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (q, plan) = line.split_once('\t').ok_or(DecomposeError::BadScript {
                line: i + 1,
                reason: "expected question<TAB>plan".into(),
            })?;
            let key = normalize_question(q);
            if let Some(prev) = s.script.get(&key) {
                if prev.trim() != plan.trim() {
                    return Err(DecomposeError::BadScript {
                        line: i + 1,
                        reason: format!("conflicting plans for {q:?}"),
                    });
                }
            }
            s.script.insert(key, plan.trim().to_string());
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DecomposeError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes back to the script format, sorted by question.
    pub fn to_script(&self) -> String {
        let sorted: BTreeMap<_, _> = self.script.iter().collect();
        sorted
            .into_iter()
            .map(|(q, p)| format!("{q}\t{p}\n"))
            .collect()
    }
}

impl Decomposer for ScriptedDecomposer {
    fn step(&self, question: &str, _history: &[HistoryTurn]) -> Result<String, DecomposeError> {
        self.script
            .get(&normalize_question(question))
            .cloned()
            .ok_or_else(|| DecomposeError::DecomposerMiss(question.to_string()))
    }
}

/// One decomposer call made while resolving.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub question: String,
    pub history: Vec<HistoryTurn>,
    pub plan: String,
    /// 1 for the root question.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub plan: PlanNode,
    pub steps: Vec<Step>,
}

/// Expands QUD placeholders depth-first, leftmost-outermost first, so each
/// sub-question is fully resolved before its next sibling.
pub fn resolve(
    question: &str,
    d: &dyn Decomposer,
    max_depth: usize,
) -> Result<Resolution, DecomposeError> {
    let max_depth = max_depth.max(1);
    let mut steps = Vec::new();
    let plan = expand(question, &[], 1, d, max_depth, &mut steps)?;
    Ok(Resolution { plan, steps })
}

/// Expands QUD placeholders inside an existing plan.
pub fn resolve_plan(
    plan: PlanNode,
    d: &dyn Decomposer,
    max_depth: usize,
) -> Result<Resolution, DecomposeError> {
    let mut steps = Vec::new();
    let plan = expand_children(plan, &[], 1, d, max_depth.max(1), &mut steps)?;
    Ok(Resolution { plan, steps })
}

fn expand(
    question: &str,
    history: &[HistoryTurn],
    depth: usize,
    d: &dyn Decomposer,
    max_depth: usize,
    steps: &mut Vec<Step>,
) -> Result<PlanNode, DecomposeError> {
    if depth > max_depth {
        return Err(DecomposeError::DepthExceeded {
            max_depth,
            question: question.to_string(),
        });
    }
    let raw = d.step(question, history)?;
    let plan = parse_plan(&raw).map_err(|error| DecomposeError::UnparseablePlan {
        question: question.to_string(),
        raw: raw.clone(),
        error,
    })?;
    steps.push(Step {
        question: question.to_string(),
        history: history.to_vec(),
        plan: raw.clone(),
        depth,
    });
    let mut chain = history.to_vec();
    chain.push(HistoryTurn {
        question: question.to_string(),
        plan: raw,
    });
    if let PlanNode::QudCall { question: inner } = &plan {
        // a plan that only defers to another question
        return expand(&inner.clone(), &chain, depth + 1, d, max_depth, steps);
    }
    expand_children(plan, &chain, depth, d, max_depth, steps)
}

fn expand_children(
    mut plan: PlanNode,
    chain: &[HistoryTurn],
    depth: usize,
    d: &dyn Decomposer,
    max_depth: usize,
    steps: &mut Vec<Step>,
) -> Result<PlanNode, DecomposeError> {
    if let PlanNode::QudCall { question } = &plan {
        return expand(&question.clone(), chain, depth, d, max_depth, steps);
    }
    let mut holes: Vec<(NodePath, String)> = Vec::new();
    plan.walk(&mut |path, node| {
        if let PlanNode::QudCall { question } = node {
            holes.push((path.clone(), question.clone()));
        }
    });
    // replacing a leaf never moves the paths of later leaves
    for (path, q) in holes {
        let sub = expand(&q, chain, depth + 1, d, max_depth, steps)?;
        *plan
            .at_path_mut(&path)
            .expect("path collected from this plan") = sub;
    }
    Ok(plan)
}

/// A finished run with its verdict, as input to [`harvest_training_pairs`].
#[derive(Debug, Clone)]
pub struct Run {
    pub question: String,
    pub resolution: Resolution,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingPair {
    pub question: String,
    pub history: Vec<HistoryTurn>,
    pub plan: String,
}

pub const MAX_PLANS_PER_QUESTION: usize = 3;

/// Step-wise pairs from correct runs only, deduplicated, with at most three
/// distinct resolved plans per question.
pub fn harvest_training_pairs(runs: &[Run]) -> Vec<TrainingPair> {
    let mut kept_plans: HashMap<String, Vec<String>> = HashMap::new();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for run in runs.iter().filter(|r| r.correct) {
        let plans = kept_plans
            .entry(normalize_question(&run.question))
            .or_default();
        let rendered = render_plan(&run.resolution.plan);
        if !plans.contains(&rendered) {
            if plans.len() >= MAX_PLANS_PER_QUESTION {
                continue;
            }
            plans.push(rendered);
        }
        for step in &run.resolution.steps {
            let pair = TrainingPair {
                question: step.question.clone(),
                history: step.history.clone(),
                plan: step.plan.clone(),
            };
            if seen.insert(pair.clone()) {
                out.push(pair);
            }
        }
    }
    out
}
