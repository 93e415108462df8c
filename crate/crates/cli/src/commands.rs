use std::cmp::Ordering;
use std::fs;
use std::io::{self, BufRead, IsTerminal, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDateTime;

use reqap_core::bench::{run_benchmark, BenchItem};
use reqap_core::decompose::resolve;
use reqap_core::event::verbalize_event;
use reqap_core::exec::{execute_located, ExecContext, ExecError, Execution, TraceRecord};
use reqap_core::ingest::{ingest_export, IngestFormat};
use reqap_core::persona::{
    ClassifierChoice, Dataset, GeneratorConfig, Period, SplitName, VerbalizeMode,
};
use reqap_core::plan::{
    parse_plan_with_spans, render_plan, validate_plan_with_spans, Level, PlanNode,
};
use reqap_core::retrieve::{HttpClassifier, Pipeline, PipelineBackend};
use reqap_core::{EventStore, StoreBuilder};

use crate::config::{ClassifierMode, CliConfig, Clock, ExtractorMode, RETRIES};
use crate::CliError;

const PROVENANCE_TEXT: usize = 90;

#[derive(Debug, Clone, Copy, Default)]
pub struct Show {
    pub trace: bool,
    pub timings: bool,
}

fn io_err(e: io::Error) -> CliError {
    CliError::Exec(format!("write failed: {e}"))
}

fn load_store(cfg: &CliConfig) -> Result<Arc<EventStore>, CliError> {
    let path = cfg
        .store
        .as_ref()
        .ok_or_else(|| CliError::Config("no event store given (--store)".into()))?;
    EventStore::load_path(path)
        .map(Arc::new)
        .map_err(|e| CliError::Config(format!("store {}: {e}", path.display())))
}

/// The clock, or the end of the latest event when none is set.
fn now_for(cfg: &CliConfig, store: &EventStore) -> Result<NaiveDateTime, CliError> {
    match cfg.clock {
        Some(Clock::At(t)) => Ok(t),
        Some(Clock::Dataset) => Err(CliError::Config(
            "`--clock dataset` only applies to bench".into(),
        )),
        None => Ok(store
            .events()
            .iter()
            .map(|e| e.span().end())
            .max()
            .expect("stores are never empty")),
    }
}

fn context(cfg: &CliConfig) -> Result<(ExecContext, Arc<EventStore>), CliError> {
    let store = load_store(cfg)?;
    let pipeline = cfg.pipeline()?.ok_or_else(|| {
        CliError::Config("a bare `oracle` classifier needs a dataset; use oracle:<path>".into())
    })?;
    let mut ctx = ExecContext::new(
        now_for(cfg, &store)?,
        Arc::new(PipelineBackend::new(store.clone(), pipeline)),
    );
    ctx.extractor = Arc::new(cfg.extractor()?);
    ctx.decomposer = cfg.decomposer()?;
    ctx.max_depth = cfg.max_depth;
    Ok((ctx, store))
}

fn clip(s: &str, n: usize) -> String {
    match s.char_indices().nth(n) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

/// Orders dotted node ids so descendants precede ancestors and siblings
/// keep their order.
fn post_order(a: &str, b: &str) -> Ordering {
    let pa: Vec<usize> = a.split('.').filter_map(|x| x.parse().ok()).collect();
    let pb: Vec<usize> = b.split('.').filter_map(|x| x.parse().ok()).collect();
    for (x, y) in pa.iter().zip(&pb) {
        if x != y {
            return x.cmp(y);
        }
    }
    pb.len().cmp(&pa.len())
}

fn trace_line(r: &TraceRecord, timings: bool) -> String {
    let sample: Vec<&str> = r.provenance_sample.iter().map(|i| i.as_str()).collect();
    let mut line = format!(
        "  {:<10} {:<9} in={:?} out={} [{}]",
        r.node_id,
        r.operator,
        r.input_sizes,
        r.output_size,
        sample.join(", ")
    );
    if !r.note.is_empty() {
        line.push(' ');
        line.push_str(&r.note);
    }
    if timings {
        line.push_str(&format!(" {:.3}ms", r.elapsed.as_secs_f64() * 1e3));
    }
    line
}

fn print_answer(
    out: &mut impl Write,
    plan: &PlanNode,
    run: &Execution,
    store: &EventStore,
    show: Show,
) -> io::Result<()> {
    writeln!(out, "answer: {}", run.result.answer_text())?;
    writeln!(out, "plan: {}", render_plan(plan))?;
    writeln!(out, "provenance: {} event(s)", run.result.provenance.len())?;
    for id in &run.result.provenance {
        match store.get(id) {
            Some(e) => writeln!(
                out,
                "  {}\t{}\t{}\t{}",
                id,
                e.source().name(),
                e.span().start().format("%Y-%m-%dT%H:%M:%S"),
                clip(&verbalize_event(e), PROVENANCE_TEXT)
            )?,
            None => writeln!(out, "  {id}")?,
        }
    }
    if show.trace || show.timings {
        let mut trace: Vec<&TraceRecord> = run.trace.iter().collect();
        trace.sort_by(|a, b| post_order(&a.node_id, &b.node_id));
        writeln!(out, "trace:")?;
        for r in trace {
            writeln!(out, "{}", trace_line(r, show.timings))?;
        }
    }
    Ok(())
}

/// Runs a resolved plan and prints the outcome. An aggregate over nothing is
/// reported as an answer, not a failure.
fn run_plan(
    ctx: &ExecContext,
    store: &EventStore,
    plan: &PlanNode,
    show: Show,
    out: &mut impl Write,
) -> Result<(), CliError> {
    match execute_located(plan, ctx) {
        Ok(run) => print_answer(out, plan, &run, store, show).map_err(io_err),
        Err(f) if matches!(*f.error, ExecError::EmptyAggregate { .. }) => {
            writeln!(
                out,
                "answer: no matching events ({} at node {})",
                f.operator, f.node_id
            )
            .map_err(io_err)?;
            writeln!(out, "plan: {}", render_plan(plan)).map_err(io_err)?;
            writeln!(out, "provenance: 0 event(s)").map_err(io_err)
        }
        Err(f) => Err(CliError::Exec(f.to_string())),
    }
}

fn read_plan_text(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Exec(format!("cannot read stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path)
            .map_err(|e| CliError::Exec(format!("cannot read {}: {e}", path.display())))
    }
}

fn parse_checked(text: &str) -> Result<PlanNode, CliError> {
    let (plan, spans) = parse_plan_with_spans(text)
        .map_err(|e| CliError::Exec(format!("plan does not parse: {e}")))?;
    let errors: Vec<String> = validate_plan_with_spans(&plan, &spans)
        .into_iter()
        .filter(|d| d.level == Level::Error)
        .map(|d| d.to_string())
        .collect();
    if errors.is_empty() {
        Ok(plan)
    } else {
        Err(CliError::Exec(format!(
            "invalid plan: {}",
            errors.join("; ")
        )))
    }
}

pub fn exec(
    cfg: &CliConfig,
    plan: &Path,
    show: Show,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let (ctx, store) = context(cfg)?;
    let plan = parse_checked(&read_plan_text(plan)?)?;
    run_plan(&ctx, &store, &plan, show, out)
}

fn ask_with(
    ctx: &ExecContext,
    store: &EventStore,
    question: &str,
    show: Show,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let decomposer = ctx
        .decomposer
        .as_deref()
        .ok_or_else(|| CliError::Config("asking needs a decomposer (--decomposer)".into()))?;
    let res = resolve(question, decomposer, ctx.max_depth)
        .map_err(|e| CliError::Exec(format!("decomposition failed: {e}")))?;
    writeln!(out, "question: {question}").map_err(io_err)?;
    run_plan(ctx, store, &res.plan, show, out)
}

pub fn ask(
    cfg: &CliConfig,
    question: &str,
    show: Show,
    out: &mut impl Write,
) -> Result<(), CliError> {
    if cfg.decomposer.is_none() {
        return Err(CliError::Config(
            "asking needs a decomposer (--decomposer)".into(),
        ));
    }
    let (ctx, store) = context(cfg)?;
    ask_with(&ctx, &store, question, show, out)
}

pub fn check(plan: &Path, out: &mut impl Write) -> Result<(), CliError> {
    let text = read_plan_text(plan)?;
    let (node, spans) = parse_plan_with_spans(&text)
        .map_err(|e| CliError::Exec(format!("plan does not parse: {e}")))?;
    let diags = validate_plan_with_spans(&node, &spans);
    for d in &diags {
        writeln!(out, "{d}").map_err(io_err)?;
    }
    let errors = diags.iter().filter(|d| d.level == Level::Error).count();
    if errors > 0 {
        return Err(CliError::Exec(format!("{errors} error(s)")));
    }
    writeln!(out, "ok: {}", render_plan(&node)).map_err(io_err)
}

pub fn ingest(inputs: &[PathBuf], format: Option<&str>, dest: &Path) -> Result<(), CliError> {
    let forced = format
        .map(|f| {
            f.parse::<IngestFormat>()
                .map_err(|e| CliError::Config(e.to_string()))
        })
        .transpose()?;
    let mut builder = StoreBuilder::new();
    for path in inputs {
        let fmt = forced
            .or_else(|| IngestFormat::from_path(path))
            .ok_or_else(|| {
                CliError::Config(format!(
                    "cannot tell the format of {}; pass --format",
                    path.display()
                ))
            })?;
        let report =
            ingest_export(&mut builder, path, fmt).map_err(|e| CliError::Exec(e.to_string()))?;
        eprintln!(
            "{}: added {}, skipped {}",
            path.display(),
            report.added,
            report.skipped
        );
        for (record, reason) in report.reasons.iter().take(5) {
            eprintln!("  record {record}: {reason}");
        }
    }
    let store = builder
        .finalize()
        .map_err(|e| CliError::Exec(e.to_string()))?;
    let file = fs::File::create(dest)
        .map_err(|e| CliError::Exec(format!("cannot create {}: {e}", dest.display())))?;
    store.dump(io::BufWriter::new(file)).map_err(io_err)?;
    println!("wrote {} events to {}", store.len(), dest.display());
    Ok(())
}

fn parse_period(s: &str) -> Result<Period, CliError> {
    let bad = || CliError::Config(format!("period `{s}`: expected YEAR or FIRST..LAST"));
    let (a, b) = s.split_once("..").unwrap_or((s, s));
    let first: i32 = a.trim().parse().map_err(|_| bad())?;
    let last: i32 = b.trim().parse().map_err(|_| bad())?;
    if last < first {
        return Err(bad());
    }
    Ok(Period::years(first, last))
}

pub struct GenerateArgs<'a> {
    pub personas: usize,
    pub period: &'a str,
    pub questions: usize,
    pub scale: f64,
    pub mode: &'a str,
    pub all_templates: bool,
}

pub fn generate(cfg: &CliConfig, dest: &Path, args: GenerateArgs<'_>) -> Result<(), CliError> {
    if !(args.scale.is_finite() && args.scale > 0.0) {
        return Err(CliError::Config(format!(
            "scale must be positive, got {}",
            args.scale
        )));
    }
    let gen = GeneratorConfig {
        seed: cfg.seed,
        personas: args.personas,
        period: parse_period(args.period)?,
        rate_scale: args.scale,
        mode: args
            .mode
            .parse::<VerbalizeMode>()
            .map_err(|e| CliError::Config(e.to_string()))?,
        questions_per_persona: args.questions,
        questions_follow_splits: !args.all_templates,
        ..GeneratorConfig::default()
    };
    let ds = Dataset::generate(&gen).map_err(|e| CliError::Exec(e.to_string()))?;
    ds.write(dest)
        .map_err(|e| CliError::Exec(format!("cannot write {}: {e}", dest.display())))?;
    for p in &ds.personas {
        println!(
            "{}\t{} events\t{} questions",
            p.persona.id,
            p.observables.len(),
            p.questions.len()
        );
    }
    println!(
        "wrote {} persona(s) to {}",
        ds.personas.len(),
        dest.display()
    );
    Ok(())
}

pub fn bench(
    cfg: &CliConfig,
    dataset: &Path,
    split: &str,
    report_path: Option<&Path>,
    traces: Option<&Path>,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let clock = cfg.clock.ok_or_else(|| {
        CliError::Config(
            "bench needs --clock (a datetime, or `dataset` for the dataset's reference time)"
                .into(),
        )
    })?;
    let split = match split {
        "all" => None,
        s => Some(
            s.parse::<SplitName>()
                .map_err(|e| CliError::Config(e.to_string()))?,
        ),
    };
    let ds = Dataset::load(dataset)
        .map_err(|e| CliError::Config(format!("dataset {}: {e}", dataset.display())))?;
    let now = match clock {
        Clock::At(t) => t,
        Clock::Dataset => ds.config.period.now(),
    };
    let choice = match &cfg.classifier {
        ClassifierMode::Lexical | ClassifierMode::External(_) => ClassifierChoice::Lexical,
        ClassifierMode::Oracle(None) => ClassifierChoice::Oracle,
        ClassifierMode::Oracle(Some(_)) => {
            return Err(CliError::Config(
                "bench reads gold labels from the dataset; use a bare `oracle`".into(),
            ))
        }
    };
    let decomposer = cfg.decomposer()?;
    let mut engines = std::collections::HashMap::new();
    for p in &ds.personas {
        let mut ctx = p
            .engine(choice, cfg.retrieval, now)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let ClassifierMode::External(url) = &cfg.classifier {
            let store = Arc::new(p.store().map_err(|e| CliError::Config(e.to_string()))?);
            let pipeline = Pipeline::with_classifiers(
                cfg.retrieval,
                Arc::new(HttpClassifier::new(url.clone(), cfg.timeout, RETRIES)),
            );
            ctx.retriever = Arc::new(PipelineBackend::new(store, pipeline));
        }
        if let Some(d) = &decomposer {
            ctx.decomposer = Some(d.clone());
        }
        if let ExtractorMode::External(_) = cfg.extractor {
            ctx.extractor = Arc::new(reqap_core::extract::Extractor {
                generator: cfg.generator(),
                user_info: p.persona.user_info(),
                ..Default::default()
            });
        }
        ctx.max_depth = cfg.max_depth;
        engines.insert(p.persona.id.clone(), ctx);
    }
    let items: Vec<BenchItem> = ds
        .questions()
        .filter(|(_, q)| split.is_none_or(|s| ds.splits.contains(s, q)))
        .map(|(_, q)| q.into())
        .collect();
    if items.is_empty() {
        return Err(CliError::Config("no questions in the chosen split".into()));
    }
    let report = run_benchmark(&items, &engines).map_err(|e| CliError::Exec(e.to_string()))?;
    write!(out, "{}", report.to_table()).map_err(io_err)?;
    if let Some(path) = report_path {
        fs::write(path, report.to_json())
            .map_err(|e| CliError::Exec(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(dir) = traces {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Exec(format!("cannot create {}: {e}", dir.display())))?;
        for o in &report.outcomes {
            let mut text = format!(
                "question: {}\ngold: {}\nprediction: {}\nhit: {}\nrelaxed hit: {}\nplan: {}\n",
                o.question,
                o.comparison.gold,
                o.comparison.prediction,
                o.comparison.strict,
                o.comparison.relaxed,
                o.plan.as_deref().unwrap_or("-")
            );
            if let Some(e) = &o.error {
                text.push_str(&format!("error: {e}\n"));
            }
            text.push_str("trace:\n");
            for line in &o.trace {
                text.push_str(&format!("  {line}\n"));
            }
            fs::write(dir.join(format!("{}.txt", o.id)), text).map_err(io_err)?;
        }
    }
    Ok(())
}

const REPL_HELP: &str = "\
Type a question to answer it, or:
  :plan <plan>   run a plan
  :trace         toggle the node trace
  :help          this text
  :quit          leave";

pub fn repl(cfg: &CliConfig) -> Result<(), CliError> {
    let (ctx, store) = context(cfg)?;
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let mut show = Show::default();
    let mut out = io::stdout().lock();
    if interactive {
        eprintln!("{REPL_HELP}");
    }
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            eprint!("reqap> ");
        }
        let Some(line) = lines.next() else { break };
        let line = line.map_err(|e| CliError::Exec(format!("cannot read input: {e}")))?;
        let line = line.trim();
        let outcome = match line {
            "" => continue,
            ":quit" | ":q" | ":exit" => break,
            ":help" => {
                writeln!(out, "{REPL_HELP}").map_err(io_err)?;
                continue;
            }
            ":trace" => {
                show.trace = !show.trace;
                writeln!(out, "trace {}", if show.trace { "on" } else { "off" }).map_err(io_err)?;
                continue;
            }
            _ => match line.strip_prefix(":plan") {
                Some(text) => {
                    parse_checked(text).and_then(|p| run_plan(&ctx, &store, &p, show, &mut out))
                }
                None => ask_with(&ctx, &store, line, show, &mut out),
            },
        };
        if let Err(e) = outcome {
            writeln!(out, "error: {e}").map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn post_order_puts_children_first() {
        let mut ids = vec!["0", "0.1", "0.0.0", "0.0", "0.1.0", "0.10", "0.2"];
        ids.sort_by(|a, b| post_order(a, b));
        assert_eq!(ids, ["0.0.0", "0.0", "0.1.0", "0.1", "0.2", "0.10", "0"]);
    }

    #[test]
    fn periods_parse() {
        assert_eq!(
            parse_period("2023..2024").unwrap(),
            Period::years(2023, 2024)
        );
        assert_eq!(parse_period("2024").unwrap(), Period::years(2024, 2024));
        assert!(parse_period("2025..2024").is_err());
    }

    #[test]
    fn clip_is_char_safe() {
        assert_eq!(clip("héllo", 2), "hé...");
        assert_eq!(clip("hi", 5), "hi");
    }
}
