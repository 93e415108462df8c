use std::cmp::Ordering;
use std::collections::HashMap;

use chrono::{Datelike, Duration, Months, NaiveDate, NaiveDateTime, Timelike};

use super::ExecError;
use crate::event::{at_midnight, Event};
use crate::plan::{Accessor, ArithOp, CmpOp, PeriodUnit, PlanNode, PredExpr, Scope};
use crate::value::Value;

/// Intermediate result of a predicate sub-expression.
#[derive(Debug, Clone, PartialEq)]
pub enum PVal {
    Val(Value),
    Period(Vec<(PeriodUnit, i64)>),
}

impl PVal {
    fn val(self) -> Result<Value, ExecError> {
        match self {
            PVal::Val(v) => Ok(v),
            PVal::Period(p) => fixed_seconds(&p).map(Value::Duration).ok_or_else(|| {
                ExecError::PredicateType("a calendar period (years/months) is not a value".into())
            }),
        }
    }
}

/// What `attr[...]`, `i1.x` and `i2.x` refer to.
pub trait Item {
    fn lookup(&self, key: &str) -> Option<Value>;
}

impl Item for Event {
    fn lookup(&self, key: &str) -> Option<Value> {
        self.get(key).map(|v| v.into_owned())
    }
}

impl Item for std::collections::BTreeMap<String, Value> {
    fn lookup(&self, key: &str) -> Option<Value> {
        self.get(key).cloned()
    }
}

/// Bindings for one evaluation.
#[derive(Clone, Copy)]
pub struct Env<'a> {
    pub item: Option<&'a dyn Item>,
    pub left: Option<&'a dyn Item>,
    pub right: Option<&'a dyn Item>,
    pub now: NaiveDateTime,
    /// Values of nested plans, keyed by node address.
    pub subplans: &'a HashMap<usize, Value>,
}

pub fn subplan_key(p: &PlanNode) -> usize {
    p as *const PlanNode as usize
}

fn fixed_seconds(parts: &[(PeriodUnit, i64)]) -> Option<i64> {
    let mut total: i64 = 0;
    for &(u, n) in parts {
        let per = match u {
            PeriodUnit::Weeks => 7 * 86_400,
            PeriodUnit::Days => 86_400,
            PeriodUnit::Hours => 3_600,
            PeriodUnit::Minutes => 60,
            PeriodUnit::Seconds => 1,
            PeriodUnit::Years | PeriodUnit::Months => return None,
        };
        total = total.checked_add(n.checked_mul(per)?)?;
    }
    Some(total)
}

pub fn truthy(v: &Value) -> bool {
    match v {
        Value::Null => false,
        Value::Bool(b) => *b,
        Value::Text(s) => !s.is_empty(),
        Value::Int(i) => *i != 0,
        Value::Real(x) => *x != 0.0,
        Value::Duration(s) => *s != 0,
        Value::List(l) => !l.is_empty(),
        Value::Date(_) | Value::Time(_) | Value::DateTime(_) => true,
    }
}

fn is_temporal(v: &Value) -> bool {
    matches!(v, Value::Date(_) | Value::Time(_) | Value::DateTime(_))
}

/// Texts compared with temporals are read as ISO temporals.
fn harmonize(a: Value, b: Value) -> (Value, Value) {
    match (&a, &b) {
        (Value::Text(s), t) if is_temporal(t) => (Value::parse_temporal(s).unwrap_or(a), b),
        (t, Value::Text(s)) if is_temporal(t) => {
            let parsed = Value::parse_temporal(s).unwrap_or(b);
            (a, parsed)
        }
        _ => (a, b),
    }
}

/// Comparison with null-is-false semantics.
pub fn compare_values(op: CmpOp, a: Value, b: Value) -> Result<bool, ExecError> {
    if a.is_null() || b.is_null() {
        return Ok(false);
    }
    let (a, b) = harmonize(a, b);
    match a.compare(&b) {
        Some(ord) => Ok(op.holds(ord)),
        None => match op {
            CmpOp::Eq => Ok(a == b),
            CmpOp::Ne => Ok(a != b),
            _ => Err(ExecError::PredicateType(format!(
                "cannot order {} against {}",
                a.type_name(),
                b.type_name()
            ))),
        },
    }
}

fn shift_months(d: NaiveDate, months: i64) -> Option<NaiveDate> {
    if months >= 0 {
        d.checked_add_months(Months::new(u32::try_from(months).ok()?))
    } else {
        d.checked_sub_months(Months::new(u32::try_from(-months).ok()?))
    }
}

/// Calendar arithmetic: months and years clamp to the month's last day,
/// then the fixed units are added.
fn add_period(v: &Value, parts: &[(PeriodUnit, i64)], sign: i64) -> Result<Value, ExecError> {
    let mut months = 0i64;
    let mut fixed = Vec::new();
    for &(u, n) in parts {
        match u {
            PeriodUnit::Years => months += 12 * n * sign,
            PeriodUnit::Months => months += n * sign,
            other => fixed.push((other, n * sign)),
        }
    }
    let secs =
        fixed_seconds(&fixed).ok_or_else(|| ExecError::PredicateType("period overflow".into()))?;
    let overflow = || ExecError::PredicateType("date arithmetic out of range".into());
    match v {
        Value::Date(d) => {
            let d = shift_months(*d, months).ok_or_else(overflow)?;
            if secs % 86_400 == 0 {
                d.checked_add_signed(Duration::days(secs / 86_400))
                    .map(Value::Date)
                    .ok_or_else(overflow)
            } else {
                at_midnight(d)
                    .checked_add_signed(Duration::seconds(secs))
                    .map(Value::DateTime)
                    .ok_or_else(overflow)
            }
        }
        Value::DateTime(dt) => {
            let d = shift_months(dt.date(), months).ok_or_else(overflow)?;
            d.and_time(dt.time())
                .checked_add_signed(Duration::seconds(secs))
                .map(Value::DateTime)
                .ok_or_else(overflow)
        }
        Value::Time(t) if months == 0 => Ok(Value::Time(*t + Duration::seconds(secs))),
        Value::Duration(s) if months == 0 => Ok(Value::Duration(s + secs)),
        other => Err(ExecError::PredicateType(format!(
            "cannot add a period to {}",
            other.type_name()
        ))),
    }
}

fn arith(op: ArithOp, a: PVal, b: PVal) -> Result<PVal, ExecError> {
    let sign = if op == ArithOp::Add { 1 } else { -1 };
    let bad = |a: &dyn std::fmt::Debug, b: &dyn std::fmt::Debug| {
        ExecError::PredicateType(format!("unsupported arithmetic between {a:?} and {b:?}"))
    };
    Ok(match (a, b) {
        (PVal::Period(mut p), PVal::Period(q)) => {
            for (u, n) in q {
                p.push((u, n * sign));
            }
            PVal::Period(p)
        }
        (PVal::Val(v), PVal::Period(p)) => {
            if v.is_null() {
                return Ok(PVal::Val(Value::Null));
            }
            let v = match v {
                Value::Text(s) => Value::parse_temporal(&s).unwrap_or(Value::Text(s)),
                v => v,
            };
            PVal::Val(add_period(&v, &p, sign)?)
        }
        (PVal::Period(p), PVal::Val(v)) if op == ArithOp::Add => {
            if v.is_null() {
                return Ok(PVal::Val(Value::Null));
            }
            PVal::Val(add_period(&v, &p, 1)?)
        }
        (PVal::Val(a), PVal::Val(b)) => {
            if a.is_null() || b.is_null() {
                return Ok(PVal::Val(Value::Null));
            }
            let (a, b) = harmonize(a, b);
            PVal::Val(match (&a, &b) {
                (Value::Int(x), Value::Int(y)) => Value::Int(
                    if sign > 0 {
                        x.checked_add(*y)
                    } else {
                        x.checked_sub(*y)
                    }
                    .ok_or_else(|| ExecError::PredicateType("integer overflow".into()))?,
                ),
                (Value::Int(_) | Value::Real(_), Value::Int(_) | Value::Real(_)) => {
                    let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
                    Value::Real(if sign > 0 { x + y } else { x - y })
                }
                (Value::Duration(x), Value::Duration(y)) => Value::Duration(x + sign * y),
                (Value::DateTime(x), Value::DateTime(y)) if sign < 0 => {
                    Value::Duration((*x - *y).num_seconds())
                }
                (Value::Date(x), Value::Date(y)) if sign < 0 => {
                    Value::Duration((*x - *y).num_seconds())
                }
                (Value::DateTime(x), Value::Date(y)) if sign < 0 => {
                    Value::Duration((*x - at_midnight(*y)).num_seconds())
                }
                (Value::Date(x), Value::DateTime(y)) if sign < 0 => {
                    Value::Duration((at_midnight(*x) - *y).num_seconds())
                }
                (Value::Time(x), Value::Time(y)) if sign < 0 => {
                    Value::Duration((*x - *y).num_seconds())
                }
                (Value::Date(_) | Value::DateTime(_) | Value::Time(_), Value::Duration(s)) => {
                    add_period(&a, &[(PeriodUnit::Seconds, *s)], sign)?
                }
                (Value::Text(x), Value::Text(y)) if sign > 0 => Value::text(format!("{x}{y}")),
                _ => return Err(bad(&a, &b)),
            })
        }
        (a, b) => return Err(bad(&a, &b)),
    })
}

const WEEKDAYS: [&str; 7] = [
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
];

pub fn weekday_name(d: NaiveDate) -> &'static str {
    WEEKDAYS[d.weekday().num_days_from_monday() as usize]
}

pub fn access(v: Value, accessor: Accessor) -> Result<Value, ExecError> {
    let v = match v {
        Value::Null => return Ok(Value::Null),
        Value::Text(s) => Value::parse_temporal(&s).ok_or_else(|| {
            ExecError::PredicateType(format!(
                "`.{}` on text that is not a date or time: {s:?}",
                accessor.name()
            ))
        })?,
        v => v,
    };
    let (date, time) = match &v {
        Value::Date(d) => (Some(*d), None),
        Value::Time(t) => (None, Some(*t)),
        Value::DateTime(dt) => (Some(dt.date()), Some(dt.time())),
        other => {
            return Err(ExecError::PredicateType(format!(
                "`.{}` on {}",
                accessor.name(),
                other.type_name()
            )))
        }
    };
    let err = || ExecError::PredicateType(format!("`.{}` on {}", accessor.name(), v.type_name()));
    let date = || date.ok_or_else(err);
    let time = || time.ok_or_else(err);
    Ok(match accessor {
        Accessor::Year => Value::Int(date()?.year() as i64),
        Accessor::Month => Value::Int(date()?.month() as i64),
        Accessor::Day => Value::Int(date()?.day() as i64),
        Accessor::Weekday => Value::text(weekday_name(date()?)),
        Accessor::Date => Value::Date(date()?),
        Accessor::Hour => Value::Int(time()?.hour() as i64),
        Accessor::Minute => Value::Int(time()?.minute() as i64),
        Accessor::Time => Value::Time(time()?),
    })
}

fn contains(haystack: &Value, needle: &Value) -> bool {
    match (haystack, needle) {
        (Value::Null, _) | (_, Value::Null) => false,
        (Value::Text(h), Value::Text(n)) => h.contains(n.as_str()),
        (Value::List(items), n) => items.iter().any(|i| i.loosely_equals(n)),
        (h, n) => h.loosely_equals(n),
    }
}

fn lower(v: Value) -> Result<Value, ExecError> {
    Ok(match v {
        Value::Text(s) => Value::Text(s.to_lowercase()),
        Value::List(items) => Value::List(items.into_iter().map(lower).collect::<Result<_, _>>()?),
        Value::Null => Value::Null,
        other => Value::text(other.to_string().to_lowercase()),
    })
}

impl Env<'_> {
    pub fn holds(&self, e: &PredExpr) -> Result<bool, ExecError> {
        Ok(truthy(&self.eval(e)?.val()?))
    }

    pub fn eval(&self, e: &PredExpr) -> Result<PVal, ExecError> {
        let v = |x: Value| Ok(PVal::Val(x));
        match e {
            PredExpr::Attr { scope, key } => {
                let item = match scope {
                    Scope::Item => self.item,
                    Scope::Left => self.left,
                    Scope::Right => self.right,
                };
                let item = item.ok_or_else(|| {
                    ExecError::PredicateType(format!("`{key}` read outside its scope"))
                })?;
                v(item.lookup(key).unwrap_or(Value::Null))
            }
            PredExpr::Lit(x) => v(x.clone()),
            PredExpr::Compare { op, lhs, rhs } => {
                let a = self.eval(lhs)?.val()?;
                let b = self.eval(rhs)?.val()?;
                v(Value::Bool(compare_values(*op, a, b)?))
            }
            PredExpr::And(a, b) => v(Value::Bool(self.holds(a)? && self.holds(b)?)),
            PredExpr::Or(a, b) => v(Value::Bool(self.holds(a)? || self.holds(b)?)),
            PredExpr::Not(a) => v(Value::Bool(!self.holds(a)?)),
            PredExpr::In { needle, haystack } | PredExpr::Contains { haystack, needle } => {
                let n = self.eval(needle)?.val()?;
                let h = self.eval(haystack)?.val()?;
                v(Value::Bool(contains(&h, &n)))
            }
            PredExpr::AnyContains {
                list,
                needle,
                fold_case,
            } => {
                let n = self.eval(needle)?.val()?;
                let l = self.eval(list)?.val()?;
                let items = match l {
                    Value::List(items) => items,
                    Value::Null => Vec::new(),
                    other => vec![other],
                };
                let hit = items.into_iter().any(|i| {
                    let i = if *fold_case {
                        lower(i).unwrap_or(Value::Null)
                    } else {
                        i
                    };
                    contains(&i, &n)
                });
                v(Value::Bool(hit))
            }
            PredExpr::Lower(a) => v(lower(self.eval(a)?.val()?)?),
            PredExpr::Len(a) => v(match self.eval(a)?.val()? {
                Value::Text(s) => Value::Int(s.chars().count() as i64),
                Value::List(l) => Value::Int(l.len() as i64),
                Value::Null => Value::Null,
                other => {
                    return Err(ExecError::PredicateType(format!(
                        "len() of {}",
                        other.type_name()
                    )))
                }
            }),
            PredExpr::Access { expr, accessor } => v(access(self.eval(expr)?.val()?, *accessor)?),
            PredExpr::Today => v(Value::Date(self.now.date())),
            PredExpr::Now => v(Value::DateTime(self.now)),
            PredExpr::Period(parts) => Ok(PVal::Period(parts.clone())),
            PredExpr::Arith { op, lhs, rhs } => arith(*op, self.eval(lhs)?, self.eval(rhs)?),
            PredExpr::SubPlan(p) => self
                .subplans
                .get(&subplan_key(p))
                .cloned()
                .map(PVal::Val)
                .ok_or_else(|| ExecError::PredicateType("nested plan was not evaluated".into())),
        }
    }
}

/// Ordering for sort keys in joins; `None` for incomparable pairs.
pub fn order(a: &Value, b: &Value) -> Option<Ordering> {
    let (a, b) = harmonize(a.clone(), b.clone());
    a.compare(&b)
}
