//! Bottom-up evaluation of resolved operator trees.

mod ops;
mod pred;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::NaiveDateTime;

pub use ops::{aggregate, apply_fn, arg_extreme, combine, group_by, join, unnest, Group};
pub use pred::{access, compare_values, subplan_key, truthy, weekday_name, Env, Item, PVal};

use crate::decompose::{resolve, DecomposeError, Decomposer, DEFAULT_MAX_DEPTH};
use crate::event::{Event, EventId};
use crate::extract::{ExtractError, Extractor, FrozenMapping};
use crate::plan::{AggOp, FnName, PlanNode, PredExpr};
use crate::retrieve::{RetrieveBackend, RetrieveError};
use crate::value::Value;

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("{op} at node {node} expected {expected}, got {got}")]
    TypeMismatch {
        node: String,
        op: &'static str,
        expected: &'static str,
        got: &'static str,
    },
    #[error("join condition reads `{0}`, which no event on that side has")]
    UnknownKeyInCondition(String),
    #[error("predicate error: {0}")]
    PredicateType(String),
    #[error("{func}: {message}")]
    FunctionDomain { func: &'static str, message: String },
    #[error("{op} over no values")]
    EmptyAggregate { op: &'static str },
    #[error("non-numeric values under `{0}`")]
    NonNumeric(String),
    #[error("unresolved sub-question {0:?}")]
    UnresolvedQud(String),
    #[error(transparent)]
    Retrieve(#[from] RetrieveError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Events(Vec<Event>),
    Grouped(Vec<Group>),
    Scalar(Value),
}

impl Output {
    pub fn kind(&self) -> &'static str {
        match self {
            Output::Events(_) => "events",
            Output::Grouped(_) => "groups",
            Output::Scalar(_) => "scalar",
        }
    }

    /// Events, groups, or 1 for a scalar.
    pub fn size(&self) -> usize {
        match self {
            Output::Events(e) => e.len(),
            Output::Grouped(g) => g.len(),
            Output::Scalar(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionResult {
    pub output: Output,
    /// Store events the output was computed from.
    pub provenance: BTreeSet<EventId>,
}

impl ExecutionResult {
    fn of_events(events: Vec<Event>) -> Self {
        let provenance = lineage(&events);
        ExecutionResult {
            output: Output::Events(events),
            provenance,
        }
    }

    fn of_groups(groups: Vec<Group>) -> Self {
        let provenance = groups.iter().flat_map(|g| lineage(&g.members)).collect();
        ExecutionResult {
            output: Output::Grouped(groups),
            provenance,
        }
    }

    pub fn scalar(&self) -> Option<&Value> {
        match &self.output {
            Output::Scalar(v) => Some(v),
            _ => None,
        }
    }

    /// Answer text: the scalar, or the number of events/groups.
    pub fn answer_text(&self) -> String {
        match &self.output {
            Output::Scalar(v) => v.to_string(),
            Output::Events(e) => format!("{} event(s)", e.len()),
            Output::Grouped(g) => format!("{} group(s)", g.len()),
        }
    }
}

fn lineage(events: &[Event]) -> BTreeSet<EventId> {
    events
        .iter()
        .flat_map(|e| e.origin().iter().cloned())
        .collect()
}

/// One executed node.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Dotted child path from the root, which is `0`.
    pub node_id: String,
    pub operator: &'static str,
    pub input_sizes: Vec<usize>,
    pub output_size: usize,
    pub elapsed: Duration,
    pub provenance_sample: Vec<EventId>,
    pub note: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sample: Vec<&str> = self.provenance_sample.iter().map(EventId::as_str).collect();
        write!(
            f,
            "{:<10} {:<9} in={:?} out={} {:.3}ms [{}]",
            self.node_id,
            self.operator,
            self.input_sizes,
            self.output_size,
            self.elapsed.as_secs_f64() * 1e3,
            sample.join(", ")
        )?;
        if !self.note.is_empty() {
            write!(f, " {}", self.note)?;
        }
        Ok(())
    }
}

pub const PROVENANCE_SAMPLE: usize = 5;

/// Everything a plan runs against. Immutable for one question.
#[derive(Clone)]
pub struct ExecContext {
    /// The fixed "now" that `date.today()` and `datetime.now()` read.
    pub now: NaiveDateTime,
    pub retriever: Arc<dyn RetrieveBackend>,
    pub extractor: Arc<Extractor>,
    /// Resolves sub-questions left in the plan, if set.
    pub decomposer: Option<Arc<dyn Decomposer>>,
    pub max_depth: usize,
}

impl ExecContext {
    pub fn new(now: NaiveDateTime, retriever: Arc<dyn RetrieveBackend>) -> Self {
        ExecContext {
            now,
            retriever,
            extractor: Arc::new(Extractor::default()),
            decomposer: None,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub result: ExecutionResult,
    /// Post-order (children before parents).
    pub trace: Vec<TraceRecord>,
}

pub fn execute(plan: &PlanNode, ctx: &ExecContext) -> Result<Execution, ExecError> {
    execute_located(plan, ctx).map_err(|f| *f.error)
}

/// An execution error with the innermost node it arose at.
#[derive(Debug, thiserror::Error)]
#[error("node {node_id} ({operator}): {error}")]
pub struct NodeFailure {
    pub node_id: String,
    pub operator: &'static str,
    #[source]
    pub error: Box<ExecError>,
}

/// Like [`execute`], but names the failing node.
pub fn execute_located(plan: &PlanNode, ctx: &ExecContext) -> Result<Execution, NodeFailure> {
    let engine = Engine {
        ctx,
        trace: Mutex::new(Vec::new()),
        seq: std::sync::atomic::AtomicUsize::new(0),
        failed: Mutex::new(None),
    };
    let result = match engine.node(plan, "0") {
        Ok(r) => r,
        Err(error) => {
            let (node_id, operator) = engine
                .failed
                .into_inner()
                .expect("failure lock")
                .unwrap_or_else(|| ("0".to_string(), plan.operator_name()));
            return Err(NodeFailure {
                node_id,
                operator,
                error: Box::new(error),
            });
        }
    };
    let mut trace = engine.trace.into_inner().expect("trace lock");
    trace.sort_by_key(|(seq, _)| *seq);
    Ok(Execution {
        result,
        trace: trace.into_iter().map(|(_, r)| r).collect(),
    })
}

struct Engine<'a> {
    ctx: &'a ExecContext,
    trace: Mutex<Vec<(usize, TraceRecord)>>,
    seq: std::sync::atomic::AtomicUsize,
    failed: Mutex<Option<(String, &'static str)>>,
}

fn child_id(id: &str, i: usize) -> String {
    format!("{id}.{i}")
}

impl Engine<'_> {
    fn mismatch(
        &self,
        id: &str,
        node: &PlanNode,
        expected: &'static str,
        got: &Output,
    ) -> ExecError {
        ExecError::TypeMismatch {
            node: id.to_string(),
            op: node.operator_name(),
            expected,
            got: got.kind(),
        }
    }

    fn events(
        &self,
        id: &str,
        node: &PlanNode,
        r: ExecutionResult,
    ) -> Result<Vec<Event>, ExecError> {
        match r.output {
            Output::Events(e) => Ok(e),
            other => Err(self.mismatch(id, node, "events", &other)),
        }
    }

    fn node(&self, node: &PlanNode, id: &str) -> Result<ExecutionResult, ExecError> {
        let started = Instant::now();
        let mut note = String::new();
        let mut input_sizes = Vec::new();
        let result = self
            .eval(node, id, &mut input_sizes, &mut note)
            .inspect_err(|_| {
                let mut failed = self.failed.lock().expect("failure lock");
                if failed.is_none() {
                    *failed = Some((id.to_string(), node.operator_name()));
                }
            })?;
        let record = TraceRecord {
            node_id: id.to_string(),
            operator: node.operator_name(),
            input_sizes,
            output_size: result.output.size(),
            elapsed: started.elapsed(),
            provenance_sample: result
                .provenance
                .iter()
                .take(PROVENANCE_SAMPLE)
                .cloned()
                .collect(),
            note,
        };
        let seq = self.seq.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        self.trace.lock().expect("trace lock").push((seq, record));
        Ok(result)
    }

    fn input(
        &self,
        node: &PlanNode,
        id: &str,
        sizes: &mut Vec<usize>,
    ) -> Result<ExecutionResult, ExecError> {
        let child = node.inputs()[0];
        let r = self.node(child, &child_id(id, 0))?;
        sizes.push(r.output.size());
        Ok(r)
    }

    /// Values of the nested plans of a predicate, each evaluated once.
    fn subplans(
        &self,
        pred: &PredExpr,
        id: &str,
        first_child: usize,
        node: &PlanNode,
    ) -> Result<(HashMap<usize, Value>, BTreeSet<EventId>), ExecError> {
        let mut values = HashMap::new();
        let mut prov = BTreeSet::new();
        for (i, sub) in pred.subplans().into_iter().enumerate() {
            let r = self.node(sub, &child_id(id, first_child + i))?;
            match r.output {
                Output::Scalar(v) => {
                    values.insert(subplan_key(sub), v);
                    prov.extend(r.provenance);
                }
                other => return Err(self.mismatch(id, node, "scalar from nested plan", &other)),
            }
        }
        Ok((values, prov))
    }

    fn env<'s>(&self, subplans: &'s HashMap<usize, Value>) -> Env<'s> {
        Env {
            item: None,
            left: None,
            right: None,
            now: self.ctx.now,
            subplans,
        }
    }

    fn eval(
        &self,
        node: &PlanNode,
        id: &str,
        sizes: &mut Vec<usize>,
        note: &mut String,
    ) -> Result<ExecutionResult, ExecError> {
        match node {
            PlanNode::QudCall { question } => {
                let d = self
                    .ctx
                    .decomposer
                    .as_ref()
                    .ok_or_else(|| ExecError::UnresolvedQud(question.clone()))?;
                let resolution = resolve(question, d.as_ref(), self.ctx.max_depth)?;
                *note = format!("resolved {question:?}");
                let r = self.node(&resolution.plan, &child_id(id, 0))?;
                sizes.push(r.output.size());
                Ok(r)
            }
            PlanNode::Retrieve { query, input } => {
                let events = match input {
                    Some(child) => {
                        let r = self.node(child, &child_id(id, 0))?;
                        sizes.push(r.output.size());
                        Some(self.events(id, node, r)?)
                    }
                    None => None,
                };
                let out = self.ctx.retriever.retrieve(query, events.as_deref())?;
                Ok(ExecutionResult::of_events(out))
            }
            PlanNode::Extract { keys, types, .. } => {
                let r = self.input(node, id, sizes)?;
                let events = self.events(id, node, r)?;
                let mut mapping = FrozenMapping::default();
                let (out, stats) = self
                    .ctx
                    .extractor
                    .extract(events, keys, types, &mut mapping)?;
                *note = format!(
                    "exact={} synonym={} frozen={} generated={} misses={}",
                    stats.exact, stats.synonym, stats.frozen, stats.generator_calls, stats.misses
                );
                Ok(ExecutionResult::of_events(out))
            }
            PlanNode::Join {
                left,
                right,
                condition,
            } => {
                let (l, r) = rayon::join(
                    || self.node(left, &child_id(id, 0)),
                    || self.node(right, &child_id(id, 1)),
                );
                let (l, r) = (l?, r?);
                sizes.extend([l.output.size(), r.output.size()]);
                let (l, r) = (self.events(id, node, l)?, self.events(id, node, r)?);
                let (subs, sub_prov) = self.subplans(condition, id, 2, node)?;
                let out = join(&l, &r, condition, &self.env(&subs))?;
                let mut res = ExecutionResult::of_events(out);
                res.provenance.extend(sub_prov);
                Ok(res)
            }
            PlanNode::GroupBy { keys, .. } => {
                let r = self.input(node, id, sizes)?;
                let events = self.events(id, node, r)?;
                Ok(ExecutionResult::of_groups(group_by(events, keys)))
            }
            PlanNode::Filter { predicate, .. } => {
                let r = self.input(node, id, sizes)?;
                let (subs, sub_prov) = self.subplans(predicate, id, 1, node)?;
                let env = self.env(&subs);
                let mut res = match r.output {
                    Output::Events(events) => {
                        let mut keep = Vec::with_capacity(events.len());
                        for e in events {
                            let item = Env {
                                item: Some(&e as &dyn Item),
                                ..env
                            };
                            if item.holds(predicate)? {
                                keep.push(e);
                            }
                        }
                        ExecutionResult::of_events(keep)
                    }
                    Output::Grouped(groups) => {
                        let mut keep = Vec::new();
                        for g in groups {
                            let item = Env {
                                item: Some(&g.key_values as &dyn Item),
                                ..env
                            };
                            if item.holds(predicate)? {
                                keep.push(g);
                            }
                        }
                        ExecutionResult::of_groups(keep)
                    }
                    other => return Err(self.mismatch(id, node, "events or groups", &other)),
                };
                res.provenance.extend(sub_prov);
                Ok(res)
            }
            PlanNode::Map { func, res_name, .. } => {
                let r = self.input(node, id, sizes)?;
                match r.output {
                    Output::Events(mut events) => {
                        for e in &mut events {
                            let v = apply_fn(func, e, None)?;
                            e.set_attr(res_name.clone(), v);
                        }
                        Ok(ExecutionResult::of_events(events))
                    }
                    Output::Grouped(mut groups) => {
                        for g in &mut groups {
                            let v = apply_fn(func, &g.key_values, Some(g.members.len()))?;
                            g.key_values.insert(res_name.clone(), v);
                        }
                        Ok(ExecutionResult::of_groups(groups))
                    }
                    other => Err(self.mismatch(id, node, "events or groups", &other)),
                }
            }
            PlanNode::Apply { func, .. } => {
                let r = self.input(node, id, sizes)?;
                if func.name != FnName::Len {
                    return Err(ExecError::FunctionDomain {
                        func: func.name.name(),
                        message: "APPLY takes a function over whole lists (len)".into(),
                    });
                }
                match r.output {
                    Output::Events(_) | Output::Grouped(_) => Ok(ExecutionResult {
                        output: Output::Scalar(Value::Int(r.output.size() as i64)),
                        provenance: r.provenance,
                    }),
                    other => Err(self.mismatch(id, node, "events or groups", &other)),
                }
            }
            PlanNode::Unnest {
                nested_key,
                unnested_key,
                ..
            } => {
                let r = self.input(node, id, sizes)?;
                let events = self.events(id, node, r)?;
                Ok(ExecutionResult::of_events(unnest(
                    events,
                    nested_key,
                    unnested_key,
                )))
            }
            PlanNode::Arg {
                op,
                arg_key,
                val_key,
                ..
            } => {
                let r = self.input(node, id, sizes)?;
                match r.output {
                    Output::Events(events) => {
                        let cands: Vec<(Value, NaiveDateTime, String, usize)> = events
                            .iter()
                            .enumerate()
                            .filter_map(|(i, e)| {
                                let v = e.get(arg_key)?.into_owned();
                                (!v.is_null()).then(|| (v, e.span().start(), e.id().to_string(), i))
                            })
                            .collect();
                        let flat: Vec<(Value, NaiveDateTime, String)> = cands
                            .iter()
                            .map(|(v, s, id, _)| (v.clone(), *s, id.clone()))
                            .collect();
                        let best = cands[arg_extreme(*op, arg_key, &flat)?].3;
                        let winner = &events[best];
                        let provenance = winner.origin().clone();
                        let output = match val_key {
                            Some(k) => Output::Scalar(
                                winner.get(k).map(|v| v.into_owned()).unwrap_or(Value::Null),
                            ),
                            None => Output::Events(vec![winner.clone()]),
                        };
                        Ok(ExecutionResult { output, provenance })
                    }
                    Output::Grouped(groups) => {
                        let cands: Vec<(Value, Option<NaiveDateTime>, String, usize)> = groups
                            .iter()
                            .enumerate()
                            .filter_map(|(i, g)| {
                                let v = g.key_values.get(arg_key)?.clone();
                                let start = g.members.iter().map(|e| e.span().start()).min();
                                (!v.is_null()).then(|| (v, start, format!("{i:010}"), i))
                            })
                            .collect();
                        if cands.is_empty()
                            && !groups.is_empty()
                            && !groups.iter().any(|g| g.key_values.contains_key(arg_key))
                        {
                            return Err(self.mismatch(
                                id,
                                node,
                                "groups carrying the argument key",
                                &Output::Grouped(Vec::new()),
                            ));
                        }
                        let flat: Vec<(Value, Option<NaiveDateTime>, String)> = cands
                            .iter()
                            .map(|(v, s, id, _)| (v.clone(), *s, id.clone()))
                            .collect();
                        let best = cands[arg_extreme(*op, arg_key, &flat)?].3;
                        let winner = &groups[best];
                        let provenance = lineage(&winner.members);
                        let output = match val_key {
                            Some(k) => Output::Scalar(
                                winner.key_values.get(k).cloned().unwrap_or(Value::Null),
                            ),
                            None => Output::Events(winner.members.clone()),
                        };
                        Ok(ExecutionResult { output, provenance })
                    }
                    other => Err(self.mismatch(id, node, "events or groups", &other)),
                }
            }
            PlanNode::Aggregate { op, key, .. } => {
                let r = self.input(node, id, sizes)?;
                let (values, lineages): (Vec<Value>, Vec<BTreeSet<EventId>>) = match r.output {
                    Output::Events(events) => events
                        .iter()
                        .filter_map(|e| {
                            let v = e.get(key)?.into_owned();
                            (!v.is_null()).then(|| (v, e.origin().clone()))
                        })
                        .unzip(),
                    Output::Grouped(groups) => {
                        if !groups.iter().any(|g| g.key_values.contains_key(key)) {
                            return Err(self.mismatch(
                                id,
                                node,
                                "events",
                                &Output::Grouped(Vec::new()),
                            ));
                        }
                        groups
                            .iter()
                            .filter_map(|g| {
                                let v = g.key_values.get(key)?.clone();
                                (!v.is_null()).then(|| (v, lineage(&g.members)))
                            })
                            .unzip()
                    }
                    other => return Err(self.mismatch(id, node, "events or groups", &other)),
                };
                let (value, used) = aggregate(*op, key, &values)?;
                let provenance = used
                    .into_iter()
                    .flat_map(|i| lineages[i].iter().cloned())
                    .collect();
                if *op == AggOp::Sum && values.is_empty() {
                    *note = "empty sum".into();
                }
                Ok(ExecutionResult {
                    output: Output::Scalar(value),
                    provenance,
                })
            }
        }
    }
}
