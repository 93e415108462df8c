//! Static checks: every consumed key must be produced below its consumer,
//! EXTRACT arity, operand shapes and simple type consistency.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::ast::*;
use crate::event::BUILTIN_KEYS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagCode {
    UnproducedKey,
    ExtractArity,
    ScalarInput,
    SubplanNotScalar,
    TypeMismatch,
    UnresolvedQud,
}

impl DiagCode {
    pub fn name(self) -> &'static str {
        match self {
            DiagCode::UnproducedKey => "UnproducedKey",
            DiagCode::ExtractArity => "ExtractArity",
            DiagCode::ScalarInput => "ScalarInput",
            DiagCode::SubplanNotScalar => "SubplanNotScalar",
            DiagCode::TypeMismatch => "TypeMismatch",
            DiagCode::UnresolvedQud => "UnresolvedQud",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub level: Level,
    pub code: DiagCode,
    pub pos: Option<Pos>,
    /// Path of the offending node.
    pub path: NodePath,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    /// `LEVEL code line:col message`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            Level::Error => "ERROR",
            Level::Warning => "WARNING",
        };
        let pos = self.pos.unwrap_or(Pos { line: 0, col: 0 });
        write!(f, "{level} {} {pos} {}", self.code.name(), self.message)
    }
}

/// Shape of an operator's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Events,
    Grouped,
    Scalar,
    Unknown,
}

/// Static type of a predicate sub-expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SType {
    Text,
    Num,
    Bool,
    Date,
    Time,
    DateTime,
    List,
    Period,
    Unknown,
}

impl SType {
    fn of_tag(t: TypeTag) -> SType {
        match t {
            TypeTag::Str => SType::Text,
            TypeTag::Int | TypeTag::Float => SType::Num,
            TypeTag::Date => SType::Date,
            TypeTag::Time => SType::Time,
            TypeTag::DateTime => SType::DateTime,
            TypeTag::List => SType::List,
        }
    }

    fn is_temporal(self) -> bool {
        matches!(self, SType::Date | SType::Time | SType::DateTime)
    }

    fn comparable(self, other: SType) -> bool {
        use SType::*;
        match (self, other) {
            (Unknown, _) | (_, Unknown) => true,
            (a, b) if a == b => true,
            (Date, DateTime) | (DateTime, Date) => true,
            // text is parsed into temporals at evaluation time
            (Text, t) | (t, Text) if t.is_temporal() => true,
            _ => false,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SType::Text => "text",
            SType::Num => "number",
            SType::Bool => "bool",
            SType::Date => "date",
            SType::Time => "time",
            SType::DateTime => "datetime",
            SType::List => "list",
            SType::Period => "period",
            SType::Unknown => "unknown",
        }
    }
}

fn builtin_type(key: &str) -> Option<SType> {
    Some(match key {
        "source" => SType::Text,
        "start_date" | "end_date" => SType::Date,
        "start_time" | "end_time" => SType::Time,
        "start_datetime" | "end_datetime" => SType::DateTime,
        _ => return None,
    })
}

#[derive(Debug, Clone)]
struct Info {
    /// `None` when an unresolved placeholder makes the key set unknowable.
    keys: Option<BTreeSet<String>>,
    types: HashMap<String, TypeTag>,
    shape: Shape,
}

impl Info {
    fn opaque() -> Self {
        Info {
            keys: None,
            types: HashMap::new(),
            shape: Shape::Unknown,
        }
    }

    fn has(&self, key: &str) -> bool {
        BUILTIN_KEYS.contains(&key) || self.keys.as_ref().is_none_or(|k| k.contains(key))
    }

    fn stype(&self, key: &str) -> SType {
        if let Some(t) = self.types.get(key) {
            return SType::of_tag(*t);
        }
        builtin_type(key).unwrap_or(SType::Unknown)
    }

    fn add(&mut self, key: &str) {
        if let Some(k) = self.keys.as_mut() {
            k.insert(key.to_string());
        }
    }
}

pub fn validate_plan(plan: &PlanNode) -> Vec<Diagnostic> {
    validate_plan_with_spans(plan, &SpanMap::new())
}

pub fn validate_plan_with_spans(plan: &PlanNode, spans: &SpanMap) -> Vec<Diagnostic> {
    let mut v = Validator {
        spans,
        out: Vec::new(),
    };
    v.node(plan, &mut Vec::new());
    v.out
}

/// Output shape of a plan, as inferred statically.
pub fn infer_shape(plan: &PlanNode) -> Shape {
    let spans = SpanMap::new();
    let mut v = Validator {
        spans: &spans,
        out: Vec::new(),
    };
    v.node(plan, &mut Vec::new()).shape
}

struct Validator<'a> {
    spans: &'a SpanMap,
    out: Vec<Diagnostic>,
}

impl Validator<'_> {
    fn emit(&mut self, level: Level, code: DiagCode, path: &NodePath, message: String) {
        self.out.push(Diagnostic {
            level,
            code,
            pos: self.spans.get(path).copied(),
            path: path.clone(),
            message,
        });
    }

    fn require(&mut self, info: &Info, key: &str, op: &str, path: &NodePath) {
        if !info.has(key) {
            self.emit(
                Level::Error,
                DiagCode::UnproducedKey,
                path,
                format!("{op} reads `{key}`, which no operator below it produces"),
            );
        }
    }

    fn list_input(&mut self, info: &Info, op: &str, path: &NodePath) {
        if info.shape == Shape::Scalar {
            self.emit(
                Level::Error,
                DiagCode::ScalarInput,
                path,
                format!("{op} needs a list of events or groups, but its input is a scalar"),
            );
        }
    }

    fn child(&mut self, node: &PlanNode, path: &mut NodePath, i: usize) -> Info {
        path.push(i);
        let info = self.node(node, path);
        path.pop();
        info
    }

    fn node(&mut self, node: &PlanNode, path: &mut NodePath) -> Info {
        let op = node.operator_name();
        match node {
            PlanNode::QudCall { question } => {
                self.emit(
                    Level::Warning,
                    DiagCode::UnresolvedQud,
                    path,
                    format!("unresolved sub-question {question:?}"),
                );
                Info::opaque()
            }
            PlanNode::Retrieve { input, .. } => match input {
                Some(i) => {
                    let info = self.child(i, path, 0);
                    self.list_input(&info, op, path);
                    Info {
                        shape: Shape::Events,
                        ..info
                    }
                }
                None => Info {
                    keys: Some(BTreeSet::new()),
                    types: HashMap::new(),
                    shape: Shape::Events,
                },
            },
            PlanNode::Extract { input, keys, types } => {
                let mut info = self.child(input, path, 0);
                self.list_input(&info, op, path);
                if keys.len() != types.len() {
                    self.emit(
                        Level::Error,
                        DiagCode::ExtractArity,
                        path,
                        format!(
                            "EXTRACT lists {} key(s) but {} type(s)",
                            keys.len(),
                            types.len()
                        ),
                    );
                }
                for (i, k) in keys.iter().enumerate() {
                    info.add(k);
                    if let Some(t) = types.get(i) {
                        info.types.insert(k.clone(), *t);
                    }
                }
                info
            }
            PlanNode::Join {
                left,
                right,
                condition,
            } => {
                let l = self.child(left, path, 0);
                let r = self.child(right, path, 1);
                self.list_input(&l, op, path);
                self.list_input(&r, op, path);
                for (scope, key) in condition.attr_keys() {
                    let side = if scope == Scope::Right { &r } else { &l };
                    self.require(side, key, op, path);
                }
                self.predicate(condition, &l, Some(&r), path, 2);
                let mut types = r.types.clone();
                types.extend(l.types.clone());
                Info {
                    keys: match (l.keys, r.keys) {
                        (Some(a), Some(b)) => Some(a.union(&b).cloned().collect()),
                        _ => None,
                    },
                    types,
                    shape: Shape::Events,
                }
            }
            PlanNode::GroupBy { input, keys } => {
                let info = self.child(input, path, 0);
                self.list_input(&info, op, path);
                for k in keys {
                    self.require(&info, k, op, path);
                }
                Info {
                    shape: Shape::Grouped,
                    ..info
                }
            }
            PlanNode::Filter { input, predicate } => {
                let info = self.child(input, path, 0);
                self.list_input(&info, op, path);
                for (_, key) in predicate.attr_keys() {
                    self.require(&info, key, op, path);
                }
                self.predicate(predicate, &info, None, path, 1);
                info
            }
            PlanNode::Map {
                input,
                func,
                res_name,
            } => {
                let mut info = self.child(input, path, 0);
                self.list_input(&info, op, path);
                for k in &func.keys {
                    self.require(&info, k, op, path);
                }
                info.add(res_name);
                info.types.remove(res_name);
                info
            }
            PlanNode::Apply { input, func } => {
                let info = self.child(input, path, 0);
                self.list_input(&info, op, path);
                for k in &func.keys {
                    self.require(&info, k, op, path);
                }
                Info {
                    shape: Shape::Scalar,
                    ..info
                }
            }
            PlanNode::Unnest {
                input,
                nested_key,
                unnested_key,
            } => {
                let mut info = self.child(input, path, 0);
                self.list_input(&info, op, path);
                self.require(&info, nested_key, op, path);
                let t = info.stype(nested_key);
                if t != SType::List && t != SType::Unknown && t != SType::Text {
                    self.emit(
                        Level::Error,
                        DiagCode::TypeMismatch,
                        path,
                        format!("UNNEST needs a list in `{nested_key}`, found {}", t.name()),
                    );
                }
                info.add(unnested_key);
                info.types.remove(unnested_key);
                info
            }
            PlanNode::Arg {
                input,
                arg_key,
                val_key,
                ..
            } => {
                let info = self.child(input, path, 0);
                self.list_input(&info, op, path);
                self.require(&info, arg_key, op, path);
                if let Some(v) = val_key {
                    self.require(&info, v, op, path);
                }
                Info {
                    shape: if val_key.is_some() {
                        Shape::Scalar
                    } else {
                        Shape::Events
                    },
                    ..info
                }
            }
            PlanNode::Aggregate {
                op: agg,
                input,
                key,
            } => {
                let info = self.child(input, path, 0);
                self.list_input(&info, op, path);
                self.require(&info, key, op, path);
                let t = info.stype(key);
                if matches!(agg, AggOp::Sum | AggOp::Avg)
                    && !matches!(t, SType::Num | SType::Unknown)
                {
                    self.emit(
                        Level::Error,
                        DiagCode::TypeMismatch,
                        path,
                        format!("{op} needs numbers in `{key}`, found {}", t.name()),
                    );
                }
                Info {
                    shape: Shape::Scalar,
                    ..info
                }
            }
        }
    }

    /// Visits nested plans (children from `first_child` on) and type-checks.
    fn predicate(
        &mut self,
        pred: &PredExpr,
        item: &Info,
        right: Option<&Info>,
        path: &mut NodePath,
        first_child: usize,
    ) {
        let mut shapes = Vec::new();
        for (i, sub) in pred.subplans().into_iter().enumerate() {
            let info = self.child(sub, path, first_child + i);
            shapes.push(info.shape);
            if matches!(info.shape, Shape::Events | Shape::Grouped) {
                path.push(first_child + i);
                self.emit(
                    Level::Error,
                    DiagCode::SubplanNotScalar,
                    path,
                    format!("nested {} must produce a single value", sub.operator_name()),
                );
                path.pop();
            }
        }
        let mut errors = Vec::new();
        infer(pred, item, right, &mut errors);
        for e in errors {
            self.emit(Level::Error, DiagCode::TypeMismatch, path, e);
        }
    }
}

fn infer(e: &PredExpr, item: &Info, right: Option<&Info>, errors: &mut Vec<String>) -> SType {
    use SType::*;
    match e {
        PredExpr::Attr { scope, key } => match (scope, right) {
            (Scope::Right, Some(r)) => r.stype(key),
            _ => item.stype(key),
        },
        PredExpr::Lit(v) => match v {
            crate::value::Value::Null => Unknown,
            crate::value::Value::Bool(_) => Bool,
            crate::value::Value::Text(_) => Text,
            crate::value::Value::Int(_) | crate::value::Value::Real(_) => Num,
            crate::value::Value::Date(_) => Date,
            crate::value::Value::Time(_) => Time,
            crate::value::Value::DateTime(_) => DateTime,
            crate::value::Value::Duration(_) => Period,
            crate::value::Value::List(_) => List,
        },
        PredExpr::Compare { op, lhs, rhs } => {
            let a = infer(lhs, item, right, errors);
            let b = infer(rhs, item, right, errors);
            if !a.comparable(b) {
                errors.push(format!(
                    "cannot compare {} {} {}",
                    a.name(),
                    op.symbol(),
                    b.name()
                ));
            }
            Bool
        }
        PredExpr::And(a, b) | PredExpr::Or(a, b) => {
            infer(a, item, right, errors);
            infer(b, item, right, errors);
            Bool
        }
        PredExpr::Not(a) => {
            infer(a, item, right, errors);
            Bool
        }
        PredExpr::In { needle, haystack } => {
            infer(needle, item, right, errors);
            let h = infer(haystack, item, right, errors);
            if !matches!(h, Text | List | Unknown) {
                errors.push(format!(
                    "`in` needs text or a list on the right, found {}",
                    h.name()
                ));
            }
            Bool
        }
        PredExpr::Lower(a) => {
            let t = infer(a, item, right, errors);
            if !matches!(t, Text | Unknown) {
                errors.push(format!("lower() needs text, found {}", t.name()));
            }
            Text
        }
        PredExpr::Contains { haystack, needle } => {
            let h = infer(haystack, item, right, errors);
            infer(needle, item, right, errors);
            if !matches!(h, Text | List | Unknown) {
                errors.push(format!(
                    "contains() needs text or a list, found {}",
                    h.name()
                ));
            }
            Bool
        }
        PredExpr::AnyContains { list, needle, .. } => {
            let l = infer(list, item, right, errors);
            infer(needle, item, right, errors);
            if !matches!(l, List | Text | Unknown) {
                errors.push(format!("any-contains needs a list, found {}", l.name()));
            }
            Bool
        }
        PredExpr::Len(a) => {
            let t = infer(a, item, right, errors);
            if !matches!(t, Text | List | Unknown) {
                errors.push(format!("len() needs text or a list, found {}", t.name()));
            }
            Num
        }
        PredExpr::Access { expr, accessor } => {
            let t = infer(expr, item, right, errors);
            let ok = match accessor {
                Accessor::Year
                | Accessor::Month
                | Accessor::Day
                | Accessor::Weekday
                | Accessor::Date => {
                    matches!(t, Date | DateTime | Text | Unknown)
                }
                Accessor::Hour | Accessor::Minute | Accessor::Time => {
                    matches!(t, Time | DateTime | Text | Unknown)
                }
            };
            if !ok {
                errors.push(format!(
                    ".{} is not available on {}",
                    accessor.name(),
                    t.name()
                ));
            }
            match accessor {
                Accessor::Weekday => Text,
                Accessor::Date => Date,
                Accessor::Time => Time,
                _ => Num,
            }
        }
        PredExpr::Today => Date,
        PredExpr::Now => DateTime,
        PredExpr::Period(_) => Period,
        PredExpr::Arith { op, lhs, rhs } => {
            let a = infer(lhs, item, right, errors);
            let b = infer(rhs, item, right, errors);
            match (a, b) {
                (Unknown, _) | (_, Unknown) => Unknown,
                (Num, Num) => Num,
                (Period, Period) => Period,
                (t, Period) if t.is_temporal() => t,
                (Period, t) if t.is_temporal() && *op == ArithOp::Add => t,
                (t, Text) | (Text, t) if t.is_temporal() || t == Period => Unknown,
                _ => {
                    errors.push(format!(
                        "cannot combine {} and {} with arithmetic",
                        a.name(),
                        b.name()
                    ));
                    Unknown
                }
            }
        }
        PredExpr::SubPlan(_) => Unknown,
    }
}
