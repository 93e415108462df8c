//! Answer metrics, paired significance and benchmark runs.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::decompose::resolve;
use crate::exec::{execute, ExecContext, Output, TraceRecord};
use crate::persona::{QuestionInstance, Tag};
use crate::value::Value;

/// Absolute tolerance for strict numeric equality.
pub const NUMERIC_TOLERANCE: f64 = 1e-9;
/// Relative slack of the relaxed metric.
pub const RELAXED_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("no discordant pairs")]
    NoDiscordantPairs,
    #[error("no engine configured for persona `{0}`")]
    NoEngine(String),
}

fn numeric(v: &Value) -> Option<f64> {
    match v {
        Value::Text(s) => s.trim().parse::<f64>().ok(),
        Value::Bool(_) => None,
        other => other.as_f64(),
    }
}

fn normalized(v: &Value) -> String {
    v.to_string().trim().to_lowercase()
}

/// Strict Hit@1: numbers as reals within [`NUMERIC_TOLERANCE`], everything
/// else by its lowercased, trimmed text form (ISO for temporals). Lists
/// match as multisets.
pub fn hit_at_1(pred: &Value, gold: &Value) -> bool {
    if gold.is_null() {
        return pred.is_null();
    }
    if let (Value::List(p), Value::List(g)) = (pred, gold) {
        let mut p: Vec<String> = p.iter().map(normalized).collect();
        let mut g: Vec<String> = g.iter().map(normalized).collect();
        p.sort();
        g.sort();
        return p == g;
    }
    if gold.is_numeric() {
        return match numeric(pred) {
            Some(p) => (p - gold.as_f64().expect("numeric")).abs() <= NUMERIC_TOLERANCE,
            None => false,
        };
    }
    !pred.is_null() && normalized(pred) == normalized(gold)
}

/// Relaxed Hit@1: numeric gold `g != 0` accepts `|pred - g| <= 0.1 |g|`,
/// gold zero needs exactly zero; non-numeric gold falls back to strict.
pub fn rlx_hit_at_1(pred: &Value, gold: &Value) -> bool {
    if hit_at_1(pred, gold) {
        return true;
    }
    if !gold.is_numeric() {
        return false;
    }
    let g = gold.as_f64().expect("numeric");
    match numeric(pred) {
        Some(p) if g == 0.0 => p.abs() <= NUMERIC_TOLERANCE,
        Some(p) => (p - g).abs() <= RELAXED_SLACK * g.abs() + NUMERIC_TOLERANCE,
        None => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerComparison {
    pub prediction: String,
    pub gold: String,
    pub strict: bool,
    pub relaxed: bool,
}

pub fn compare(pred: &Value, gold: &Value) -> AnswerComparison {
    AnswerComparison {
        prediction: pred.to_string(),
        gold: gold.to_string(),
        strict: hit_at_1(pred, gold),
        relaxed: rlx_hit_at_1(pred, gold),
    }
}

/// Exact-binomial McNemar p-value over paired verdicts of methods A and B.
pub fn mcnemar(pairs: &[(bool, bool)]) -> Result<f64, BenchError> {
    let b = pairs.iter().filter(|(a, b)| *a && !*b).count();
    let c = pairs.iter().filter(|(a, b)| !*a && *b).count();
    mcnemar_counts(b, c)
}

/// `p = 2 * sum_{k <= min(b, c)} C(b + c, k) / 2^(b + c)`, capped at 1.
pub fn mcnemar_counts(b: usize, c: usize) -> Result<f64, BenchError> {
    let n = b + c;
    if n == 0 {
        return Err(BenchError::NoDiscordantPairs);
    }
    let mut term = BigUint::one();
    let mut tail = BigUint::zero();
    for k in 0..=b.min(c) {
        if k > 0 {
            term = term * BigUint::from(n - k + 1) / BigUint::from(k);
        }
        tail += &term;
    }
    let p = BigRational::new((tail * 2u32).into(), (BigUint::one() << n).into());
    Ok(p.to_f64().unwrap_or(1.0).min(1.0))
}

/// Whatever the harness needs to know about one question.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchItem {
    pub id: String,
    pub persona: String,
    pub question: String,
    pub gold: Value,
    pub tags: Vec<Tag>,
    pub structured_only: bool,
}

impl From<&QuestionInstance> for BenchItem {
    fn from(q: &QuestionInstance) -> Self {
        BenchItem {
            id: q.id.clone(),
            persona: q.persona.clone(),
            question: q.question.clone(),
            gold: q.gold.clone(),
            tags: q.tags.clone(),
            structured_only: q.structured_only,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuestionOutcome {
    pub id: String,
    pub persona: String,
    pub question: String,
    pub tags: Vec<Tag>,
    pub structured_only: bool,
    #[serde(flatten)]
    pub comparison: AnswerComparison,
    pub plan: Option<String>,
    pub error: Option<String>,
    pub elapsed_ms: f64,
    /// Rendered trace lines, children before parents.
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Score {
    pub questions: usize,
    pub hit_at_1: f64,
    pub rlx_hit_at_1: f64,
}

impl Score {
    fn of<'a>(outcomes: impl Iterator<Item = &'a QuestionOutcome>) -> Self {
        let (mut n, mut strict, mut relaxed) = (0usize, 0usize, 0usize);
        for o in outcomes {
            n += 1;
            strict += usize::from(o.comparison.strict);
            relaxed += usize::from(o.comparison.relaxed);
        }
        let ratio = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        Score {
            questions: n,
            hit_at_1: ratio(strict),
            rlx_hit_at_1: ratio(relaxed),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OperatorTiming {
    pub calls: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
}

impl OperatorTiming {
    fn of(mut ms: Vec<f64>) -> Self {
        OperatorTiming {
            calls: ms.len(),
            mean_ms: mean(&ms),
            median_ms: median(&mut ms),
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub overall: Score,
    pub structured_only: Score,
    pub by_tag: BTreeMap<String, Score>,
    /// Time spent in each operator excluding its children.
    pub operators: BTreeMap<String, OperatorTiming>,
    /// Whole-question latency.
    pub latency: OperatorTiming,
    pub outcomes: Vec<QuestionOutcome>,
}

impl BenchReport {
    pub fn from_outcomes(
        outcomes: Vec<QuestionOutcome>,
        op_times: BTreeMap<String, Vec<f64>>,
    ) -> Self {
        let by_tag = Tag::ALL
            .iter()
            .map(|t| {
                (
                    t.name().to_string(),
                    Score::of(outcomes.iter().filter(|o| o.tags.contains(t))),
                )
            })
            .collect();
        BenchReport {
            overall: Score::of(outcomes.iter()),
            structured_only: Score::of(outcomes.iter().filter(|o| o.structured_only)),
            by_tag,
            operators: op_times
                .into_iter()
                .map(|(k, v)| (k, OperatorTiming::of(v)))
                .collect(),
            latency: OperatorTiming::of(outcomes.iter().map(|o| o.elapsed_ms).collect()),
            outcomes,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary tables.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, name: &str, sc: &Score| {
            let _ = writeln!(
                s,
                "{name:<16} {:>5} {:>8.3} {:>12.3}",
                sc.questions, sc.hit_at_1, sc.rlx_hit_at_1
            );
        };
        let _ = writeln!(
            s,
            "{:<16} {:>5} {:>8} {:>12}",
            "subset", "n", "Hit@1", "Rlx-Hit@1"
        );
        row(&mut s, "overall", &self.overall);
        row(&mut s, "structured-only", &self.structured_only);
        for (tag, sc) in &self.by_tag {
            row(&mut s, tag, sc);
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<10} {:>7} {:>10} {:>10}",
            "operator", "calls", "mean ms", "median ms"
        );
        for (op, t) in &self.operators {
            let _ = writeln!(
                s,
                "{op:<10} {:>7} {:>10.3} {:>10.3}",
                t.calls, t.mean_ms, t.median_ms
            );
        }
        let _ = writeln!(
            s,
            "{:<10} {:>7} {:>10.3} {:>10.3}",
            "question", self.latency.calls, self.latency.mean_ms, self.latency.median_ms
        );
        s
    }
}

/// Self time per trace record: elapsed minus the elapsed of direct children.
pub fn self_times(trace: &[TraceRecord]) -> Vec<(&'static str, Duration)> {
    trace
        .iter()
        .map(|r| {
            let children: Duration = trace
                .iter()
                .filter(|c| {
                    c.node_id
                        .strip_prefix(r.node_id.as_str())
                        .and_then(|rest| rest.strip_prefix('.'))
                        .is_some_and(|rest| !rest.contains('.'))
                })
                .map(|c| c.elapsed)
                .sum();
            (r.operator, r.elapsed.saturating_sub(children))
        })
        .collect()
}

fn run_one(item: &BenchItem, ctx: &ExecContext) -> (QuestionOutcome, Vec<(&'static str, f64)>) {
    let started = Instant::now();
    let mut plan_text = None;
    let mut error = None;
    let mut trace_lines = Vec::new();
    let mut times = Vec::new();
    let pred = match ctx.decomposer.as_deref() {
        None => {
            error = Some("no decomposer configured".to_string());
            Value::Null
        }
        Some(d) => match resolve(&item.question, d, ctx.max_depth) {
            Err(e) => {
                error = Some(e.to_string());
                Value::Null
            }
            Ok(res) => {
                plan_text = Some(crate::plan::render_plan(&res.plan));
                match execute(&res.plan, ctx) {
                    Err(e) => {
                        error = Some(e.to_string());
                        Value::Null
                    }
                    Ok(run) => {
                        trace_lines = run.trace.iter().map(ToString::to_string).collect();
                        times = self_times(&run.trace)
                            .into_iter()
                            .map(|(op, d)| (op, d.as_secs_f64() * 1e3))
                            .collect();
                        match run.result.output {
                            Output::Scalar(v) => v,
                            other => {
                                error =
                                    Some(format!("plan produced {}, not an answer", other.kind()));
                                Value::Null
                            }
                        }
                    }
                }
            }
        },
    };
    let outcome = QuestionOutcome {
        id: item.id.clone(),
        persona: item.persona.clone(),
        question: item.question.clone(),
        tags: item.tags.clone(),
        structured_only: item.structured_only,
        comparison: compare(&pred, &item.gold),
        plan: plan_text,
        error,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        trace: trace_lines,
    };
    (outcome, times)
}

/// Runs every question against its persona's engine on a worker pool.
/// Failures count as misses. Outcomes keep the input order.
pub fn run_benchmark(
    items: &[BenchItem],
    engines: &HashMap<String, ExecContext>,
) -> Result<BenchReport, BenchError> {
    if let Some(missing) = items.iter().find(|i| !engines.contains_key(&i.persona)) {
        return Err(BenchError::NoEngine(missing.persona.clone()));
    }
    let results: Vec<_> = items
        .par_iter()
        .map(|item| run_one(item, &engines[&item.persona]))
        .collect();
    let mut op_times: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut outcomes = Vec::with_capacity(results.len());
    for (outcome, times) in results {
        for (op, ms) in times {
            op_times.entry(op.to_string()).or_default().push(ms);
        }
        outcomes.push(outcome);
    }
    Ok(BenchReport::from_outcomes(outcomes, op_times))
}
