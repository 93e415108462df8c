//! Python bindings: event stores, plan parsing and validation, execution
//! with traceable answers, metrics and dataset generation.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, TimeDelta};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use reqap_core::bench;
use reqap_core::decompose::{resolve, Decomposer, ScriptedDecomposer};
use reqap_core::exec::{execute_located, ExecContext, Output, TraceRecord};
use reqap_core::extract::Extractor;
use reqap_core::ingest::lines::encode_event;
use reqap_core::persona::{Dataset, GeneratorConfig, Period};
use reqap_core::plan::{
    parse_plan_with_spans, render_plan, validate_plan_with_spans, Level, PlanNode,
};
use reqap_core::retrieve::{
    deduplicate as dedup_events, OracleClassifier, Pipeline, PipelineBackend, RetrievalConfig,
};
use reqap_core::{Event, EventId, EventStore, Value};

create_exception!(reqap, ReqapError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    ReqapError::new_err(e.to_string())
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Text(s) => s.into_pyobject(py)?.into_any(),
        Value::Int(i) => i.into_pyobject(py)?.into_any(),
        Value::Real(x) => x.into_pyobject(py)?.into_any(),
        Value::Date(d) => d.into_pyobject(py)?.into_any(),
        Value::Time(t) => t.into_pyobject(py)?.into_any(),
        Value::DateTime(t) => t.into_pyobject(py)?.into_any(),
        Value::Duration(s) => TimeDelta::seconds(*s).into_pyobject(py)?.into_any(),
        Value::List(items) => {
            let out = PyList::empty(py);
            for item in items {
                out.append(value_to_py(py, item)?)?;
            }
            out.into_any()
        }
    })
}

fn value_from_py(ob: &Bound<'_, PyAny>) -> PyResult<Value> {
    if ob.is_none() {
        return Ok(Value::Null);
    }
    if let Ok(b) = ob.extract::<bool>() {
        return Ok(Value::Bool(b));
    }
    if let Ok(i) = ob.extract::<i64>() {
        return Ok(Value::Int(i));
    }
    if let Ok(x) = ob.extract::<f64>() {
        return Ok(Value::Real(x));
    }
    if let Ok(s) = ob.extract::<String>() {
        return Ok(Value::Text(s));
    }
    if let Ok(t) = ob.extract::<NaiveDateTime>() {
        return Ok(Value::DateTime(t));
    }
    if let Ok(d) = ob.extract::<NaiveDate>() {
        return Ok(Value::Date(d));
    }
    if let Ok(t) = ob.extract::<NaiveTime>() {
        return Ok(Value::Time(t));
    }
    if let Ok(d) = ob.extract::<TimeDelta>() {
        return Ok(Value::Duration(d.num_seconds()));
    }
    if let Ok(items) = ob.extract::<Vec<Bound<'_, PyAny>>>() {
        let values = items
            .iter()
            .map(value_from_py)
            .collect::<PyResult<Vec<_>>>()?;
        return Value::list(values).map_err(err);
    }
    Err(err(format!(
        "cannot use {} as a value",
        ob.get_type().name()?
    )))
}

fn plain_json<'py>(ob: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let py = ob.py();
    if let Ok(d) = ob.extract::<TimeDelta>() {
        let out = PyDict::new(py);
        out.set_item("seconds", d.num_seconds())?;
        return Ok(out.into_any());
    }
    if ob.hasattr("isoformat")? {
        return ob.call_method0("isoformat");
    }
    if ob.is_instance_of::<PyList>() {
        let out = PyList::empty(py);
        for item in ob.try_iter()? {
            out.append(plain_json(&item?)?)?;
        }
        return Ok(out.into_any());
    }
    Ok(ob.clone())
}

/// One event: id, source, time span and attributes.
#[pyclass(name = "Event", module = "reqap", frozen, from_py_object)]
#[derive(Clone)]
struct PyEvent {
    inner: Event,
}

#[pymethods]
impl PyEvent {
    #[getter]
    fn id(&self) -> &str {
        self.inner.id().as_str()
    }

    #[getter]
    fn source(&self) -> &'static str {
        self.inner.source().name()
    }

    #[getter]
    fn start(&self) -> NaiveDateTime {
        self.inner.span().start()
    }

    #[getter]
    fn end(&self) -> NaiveDateTime {
        self.inner.span().end()
    }

    #[getter]
    fn attrs<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (k, v) in self.inner.attrs() {
            d.set_item(k, value_to_py(py, v)?)?;
        }
        Ok(d)
    }

    /// Store events this one was merged from, or its own id.
    #[getter]
    fn origin(&self) -> Vec<String> {
        self.inner.origin().iter().map(|i| i.to_string()).collect()
    }

    /// Attribute or built-in temporal key such as `start_date`.
    fn get<'py>(&self, py: Python<'py>, key: &str) -> PyResult<Bound<'py, PyAny>> {
        match self.inner.get(key) {
            Some(v) => value_to_py(py, &v),
            None => Ok(py.None().into_bound(py)),
        }
    }

    fn to_json(&self) -> String {
        encode_event(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Event({:?}, {}, {})",
            self.inner.id().as_str(),
            self.inner.source().name(),
            self.inner.span().start()
        )
    }
}

/// Read-only collection of events, sorted by start then id.
#[pyclass(name = "EventStore", module = "reqap", frozen)]
struct PyStore {
    inner: Arc<EventStore>,
}

#[pymethods]
impl PyStore {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        EventStore::load_path(path)
            .map(|s| PyStore { inner: Arc::new(s) })
            .map_err(err)
    }

    /// Event lines: one JSON record per line.
    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        EventStore::load(text.as_bytes())
            .map(|s| PyStore { inner: Arc::new(s) })
            .map_err(err)
    }

    /// Records as dicts with `source`, `start`, optional `end` and `id`, and
    /// any further attributes. Dates, times and timedeltas are accepted.
    #[staticmethod]
    fn from_records(py: Python<'_>, records: Vec<Bound<'_, PyDict>>) -> PyResult<Self> {
        let json = py.import("json")?;
        let mut text = String::new();
        for r in records {
            let plain = PyDict::new(py);
            for (k, v) in r.iter() {
                plain.set_item(k, plain_json(&v)?)?;
            }
            let line: String = json.call_method1("dumps", (plain,))?.extract()?;
            text.push_str(&line);
            text.push('\n');
        }
        Self::from_jsonl(&text)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn events(&self) -> Vec<PyEvent> {
        self.inner
            .events()
            .iter()
            .map(|e| PyEvent { inner: e.clone() })
            .collect()
    }

    fn get(&self, id: &str) -> Option<PyEvent> {
        self.inner
            .get(&EventId::new(id))
            .map(|e| PyEvent { inner: e.clone() })
    }

    fn dump(&self) -> String {
        self.inner.dump_to_string()
    }
}

/// Result of running a plan: the answer, the plan that produced it, the
/// supporting events and the per-node trace.
#[pyclass(name = "Answer", module = "reqap", frozen)]
struct PyAnswer {
    output: Output,
    text: String,
    plan: String,
    provenance: Vec<String>,
    trace: Vec<TraceRecord>,
}

#[pymethods]
impl PyAnswer {
    /// The scalar, the list of events, or a list of `{"key": ..., "members": [...]}`.
    #[getter]
    fn value<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        match &self.output {
            Output::Scalar(v) => value_to_py(py, v),
            Output::Events(events) => {
                let out = PyList::empty(py);
                for e in events {
                    out.append(PyEvent { inner: e.clone() })?;
                }
                Ok(out.into_any())
            }
            Output::Grouped(groups) => {
                let out = PyList::empty(py);
                for g in groups {
                    let d = PyDict::new(py);
                    let key = PyDict::new(py);
                    for (k, v) in &g.key_values {
                        key.set_item(k, value_to_py(py, v)?)?;
                    }
                    d.set_item("key", key)?;
                    let members: Vec<PyEvent> = g
                        .members
                        .iter()
                        .map(|e| PyEvent { inner: e.clone() })
                        .collect();
                    d.set_item("members", members)?;
                    out.append(d)?;
                }
                Ok(out.into_any())
            }
        }
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.output.kind()
    }

    #[getter]
    fn text(&self) -> &str {
        &self.text
    }

    #[getter]
    fn plan(&self) -> &str {
        &self.plan
    }

    #[getter]
    fn provenance(&self) -> Vec<String> {
        self.provenance.clone()
    }

    /// One dict per executed node, children before parents.
    #[getter]
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.trace
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("node", &r.node_id)?;
                d.set_item("operator", r.operator)?;
                d.set_item("input_sizes", r.input_sizes.clone())?;
                d.set_item("output_size", r.output_size)?;
                d.set_item("elapsed_ms", r.elapsed.as_secs_f64() * 1e3)?;
                d.set_item("note", &r.note)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Answer({:?}, {} supporting event(s))",
            self.text,
            self.provenance.len()
        )
    }
}

fn parse_checked(text: &str) -> PyResult<PlanNode> {
    let (plan, spans) = parse_plan_with_spans(text).map_err(err)?;
    let errors: Vec<String> = validate_plan_with_spans(&plan, &spans)
        .into_iter()
        .filter(|d| d.level == Level::Error)
        .map(|d| d.to_string())
        .collect();
    if errors.is_empty() {
        Ok(plan)
    } else {
        Err(err(errors.join("; ")))
    }
}

/// Executes plans and answers questions over one store.
#[pyclass(name = "Engine", module = "reqap", frozen)]
struct PyEngine {
    ctx: ExecContext,
}

#[pymethods]
impl PyEngine {
    /// `classifier` is "lexical" or "oracle"; the latter reads `oracle`, a
    /// dict from query to relevant event ids. `script` maps questions to
    /// plans, as a dict or as question-tab-plan text. `clock` fixes "now";
    /// it defaults to the end of the latest event.
    #[new]
    #[pyo3(signature = (store, *, classifier = "lexical", oracle = None, script = None, clock = None, user_info = "", dedup = true))]
    fn new(
        store: &PyStore,
        classifier: &str,
        oracle: Option<HashMap<String, Vec<String>>>,
        script: Option<Bound<'_, PyAny>>,
        clock: Option<NaiveDateTime>,
        user_info: &str,
        dedup: bool,
    ) -> PyResult<Self> {
        let cfg = RetrievalConfig {
            dedup,
            ..RetrievalConfig::default()
        };
        let pipeline = match (classifier, oracle) {
            ("lexical", None) => Pipeline::lexical(cfg),
            ("oracle", Some(gold)) => {
                let mut o = OracleClassifier::new();
                for (q, ids) in gold {
                    o.insert(&q, ids.into_iter().map(EventId::new));
                }
                Pipeline::with_classifiers(cfg, Arc::new(o))
            }
            ("oracle", None) => return Err(err("the oracle classifier needs `oracle` labels")),
            ("lexical", Some(_)) => return Err(err("`oracle` labels need classifier=\"oracle\"")),
            (other, _) => return Err(err(format!("unknown classifier `{other}`"))),
        };
        let decomposer: Option<Arc<dyn Decomposer>> = match script {
            None => None,
            Some(s) => Some(Arc::new(if let Ok(text) = s.extract::<String>() {
                ScriptedDecomposer::parse(&text).map_err(err)?
            } else {
                let pairs: BTreeMap<String, String> = s.extract()?;
                ScriptedDecomposer::from_pairs(pairs)
            })),
        };
        let store = store.inner.clone();
        let now = clock.unwrap_or_else(|| {
            store
                .events()
                .iter()
                .map(|e| e.span().end())
                .max()
                .expect("stores are never empty")
        });
        let mut ctx = ExecContext::new(now, Arc::new(PipelineBackend::new(store, pipeline)));
        ctx.extractor = Arc::new(Extractor {
            user_info: user_info.to_string(),
            ..Extractor::default()
        });
        ctx.decomposer = decomposer;
        Ok(PyEngine { ctx })
    }

    #[getter]
    fn clock(&self) -> NaiveDateTime {
        self.ctx.now
    }

    fn execute(&self, py: Python<'_>, plan: &str) -> PyResult<PyAnswer> {
        let plan = parse_checked(plan)?;
        py.detach(|| run(&self.ctx, &plan))
    }

    /// Decomposes with the script, then executes.
    fn ask(&self, py: Python<'_>, question: &str) -> PyResult<PyAnswer> {
        let d = self
            .ctx
            .decomposer
            .as_deref()
            .ok_or_else(|| err("asking needs a `script`"))?;
        py.detach(|| {
            let res = resolve(question, d, self.ctx.max_depth).map_err(err)?;
            run(&self.ctx, &res.plan)
        })
    }

    fn retrieve(&self, py: Python<'_>, query: &str) -> PyResult<Vec<PyEvent>> {
        let events = py
            .detach(|| self.ctx.retriever.retrieve(query, None))
            .map_err(err)?;
        Ok(events.into_iter().map(|inner| PyEvent { inner }).collect())
    }
}

fn run(ctx: &ExecContext, plan: &PlanNode) -> PyResult<PyAnswer> {
    let run = execute_located(plan, ctx).map_err(err)?;
    Ok(PyAnswer {
        text: run.result.answer_text(),
        provenance: run
            .result
            .provenance
            .iter()
            .map(|i| i.to_string())
            .collect(),
        output: run.result.output,
        plan: render_plan(plan),
        trace: run.trace,
    })
}

/// Parses a plan and returns its canonical rendering.
#[pyfunction]
fn parse_plan(text: &str) -> PyResult<String> {
    let (plan, _) = parse_plan_with_spans(text).map_err(err)?;
    Ok(render_plan(&plan))
}

/// Diagnostics as dicts with level, code, line, col and message.
#[pyfunction]
fn validate_plan<'py>(py: Python<'py>, text: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let (plan, spans) = parse_plan_with_spans(text).map_err(err)?;
    validate_plan_with_spans(&plan, &spans)
        .into_iter()
        .map(|d| {
            let out = PyDict::new(py);
            out.set_item(
                "level",
                if d.level == Level::Error {
                    "error"
                } else {
                    "warning"
                },
            )?;
            out.set_item("code", d.code.name())?;
            out.set_item("line", d.pos.map(|p| p.line))?;
            out.set_item("col", d.pos.map(|p| p.col))?;
            out.set_item("message", d.message)?;
            Ok(out)
        })
        .collect()
}

#[pyfunction]
fn hit_at_1(prediction: &Bound<'_, PyAny>, gold: &Bound<'_, PyAny>) -> PyResult<bool> {
    Ok(bench::hit_at_1(
        &value_from_py(prediction)?,
        &value_from_py(gold)?,
    ))
}

#[pyfunction]
fn rlx_hit_at_1(prediction: &Bound<'_, PyAny>, gold: &Bound<'_, PyAny>) -> PyResult<bool> {
    Ok(bench::rlx_hit_at_1(
        &value_from_py(prediction)?,
        &value_from_py(gold)?,
    ))
}

/// Exact two-sided McNemar p-value from the discordant counts.
#[pyfunction]
fn mcnemar(b: usize, c: usize) -> PyResult<f64> {
    bench::mcnemar_counts(b, c).map_err(err)
}

/// Merges events from different sources that describe the same happening.
#[pyfunction]
fn deduplicate(events: Vec<PyEvent>) -> Vec<PyEvent> {
    dedup_events(events.into_iter().map(|e| e.inner).collect())
        .into_iter()
        .map(|inner| PyEvent { inner })
        .collect()
}

/// Writes a synthetic dataset to `out` and returns the persona ids.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (out, *, seed = 1, personas = 2, first_year = 2024, last_year = 2024, scale = 1.0, questions = 50))]
fn generate_dataset(
    py: Python<'_>,
    out: &str,
    seed: u64,
    personas: usize,
    first_year: i32,
    last_year: i32,
    scale: f64,
    questions: usize,
) -> PyResult<Vec<String>> {
    let cfg = GeneratorConfig {
        seed,
        personas,
        period: Period::years(first_year, last_year),
        rate_scale: scale,
        questions_per_persona: questions,
        ..GeneratorConfig::default()
    };
    py.detach(|| {
        let ds = Dataset::generate(&cfg).map_err(err)?;
        ds.write(out).map_err(err)?;
        Ok(ds.personas.iter().map(|p| p.persona.id.clone()).collect())
    })
}

#[pymodule]
fn reqap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ReqapError", m.py().get_type::<ReqapError>())?;
    m.add_class::<PyEvent>()?;
    m.add_class::<PyStore>()?;
    m.add_class::<PyAnswer>()?;
    m.add_class::<PyEngine>()?;
    m.add_function(wrap_pyfunction!(parse_plan, m)?)?;
    m.add_function(wrap_pyfunction!(validate_plan, m)?)?;
    m.add_function(wrap_pyfunction!(hit_at_1, m)?)?;
    m.add_function(wrap_pyfunction!(rlx_hit_at_1, m)?)?;
    m.add_function(wrap_pyfunction!(mcnemar, m)?)?;
    m.add_function(wrap_pyfunction!(deduplicate, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    Ok(())
}
