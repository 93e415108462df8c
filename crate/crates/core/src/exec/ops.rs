use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;

use chrono::{Datelike, Timelike};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::pred::{order, weekday_name, Env, Item};
use super::ExecError;
use crate::event::{Event, EventId};
use crate::plan::{AggOp, ArgOp, CmpOp, FnExpr, FnName, PredExpr, Scope};
use crate::value::{Value, ValueKey};

/// A partition cell: the grouping key values (plus values mapped onto the
/// group) and the member events.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub key_values: BTreeMap<String, Value>,
    pub members: Vec<Event>,
}

/// Hash partition in first-appearance order. Missing keys group as null.
pub fn group_by(events: Vec<Event>, keys: &[String]) -> Vec<Group> {
    let mut index: HashMap<Vec<ValueKey>, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for e in events {
        let vals: Vec<Value> = keys
            .iter()
            .map(|k| e.get(k).map(|v| v.into_owned()).unwrap_or(Value::Null))
            .collect();
        let hk: Vec<ValueKey> = vals.iter().cloned().map(ValueKey).collect();
        let slot = *index.entry(hk).or_insert_with(|| {
            groups.push(Group {
                key_values: keys.iter().cloned().zip(vals).collect(),
                members: Vec::new(),
            });
            groups.len() - 1
        });
        groups[slot].members.push(e);
    }
    groups
}

/// Joins two events: left attributes, then right ones (colliding keys get
/// `__r` appended), enclosing span, unioned lineage.
pub fn combine(left: &Event, right: &Event) -> Event {
    let span = left.span().enclose(right.span());
    let origin: BTreeSet<EventId> = left.origin().union(right.origin()).cloned().collect();
    let id = EventId::new(format!("{}|{}", left.id(), right.id()));
    let mut out = left.clone().with_identity(id, span, origin);
    for (k, v) in right.attrs() {
        let mut key = k.clone();
        while out.attrs().contains_key(&key) {
            key.push_str("__r");
        }
        out.set_attr(key, v.clone());
    }
    for m in right.misses() {
        out.mark_miss(m);
    }
    out
}

fn conjuncts<'a>(e: &'a PredExpr, out: &mut Vec<&'a PredExpr>) {
    if let PredExpr::And(a, b) = e {
        conjuncts(a, out);
        conjuncts(b, out);
    } else {
        out.push(e);
    }
}

/// A conjunct `i1.a OP i2.b`, normalized so the left key is on the left.
fn bound(e: &PredExpr) -> Option<(&str, CmpOp, &str)> {
    let PredExpr::Compare { op, lhs, rhs } = e else {
        return None;
    };
    match (&**lhs, &**rhs) {
        (
            PredExpr::Attr {
                scope: Scope::Left,
                key: a,
            },
            PredExpr::Attr {
                scope: Scope::Right,
                key: b,
            },
        ) => Some((a, *op, b)),
        (
            PredExpr::Attr {
                scope: Scope::Right,
                key: b,
            },
            PredExpr::Attr {
                scope: Scope::Left,
                key: a,
            },
        ) => Some((a, op.flipped(), b)),
        _ => None,
    }
}

fn check_keys(condition: &PredExpr, left: &[Event], right: &[Event]) -> Result<(), ExecError> {
    for (scope, key) in condition.attr_keys() {
        let side = if scope == Scope::Right { right } else { left };
        if !side.is_empty() && !side.iter().any(|e| e.has_key(key)) {
            return Err(ExecError::UnknownKeyInCondition(key.to_string()));
        }
    }
    Ok(())
}

/// All pairs satisfying `condition`, ordered by left then right span start.
///
/// The right side is sorted on the key of the first `i1.a OP i2.b`
/// conjunct; each left event binary-searches its window of candidates,
/// which the full condition then checks.
pub fn join(
    left: &[Event],
    right: &[Event],
    condition: &PredExpr,
    env: &Env<'_>,
) -> Result<Vec<Event>, ExecError> {
    if left.is_empty() || right.is_empty() {
        return Ok(Vec::new());
    }
    check_keys(condition, left, right)?;
    let mut cs = Vec::new();
    conjuncts(condition, &mut cs);
    let holds = |l: &Event, r: &Event| -> Result<bool, ExecError> {
        let pair = Env {
            item: None,
            left: Some(l as &dyn Item),
            right: Some(r as &dyn Item),
            now: env.now,
            subplans: env.subplans,
        };
        pair.holds(condition)
    };

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let keyed = cs.iter().find_map(|c| bound(c)).and_then(|(a, op, b)| {
        let rv: Vec<(Value, usize)> = right
            .iter()
            .enumerate()
            .filter_map(|(j, e)| {
                e.get(b)
                    .map(|v| v.into_owned())
                    .filter(|v| !v.is_null())
                    .map(|v| (v, j))
            })
            .collect();
        let comparable = rv.windows(2).all(|w| order(&w[0].0, &w[1].0).is_some());
        comparable.then_some((a, op, rv))
    });
    match keyed {
        Some((a, op, mut rv)) => {
            rv.sort_by(|x, y| {
                order(&x.0, &y.0)
                    .unwrap_or(Ordering::Equal)
                    .then(x.1.cmp(&y.1))
            });
            for (i, l) in left.iter().enumerate() {
                let Some(lv) = l.get(a).map(|v| v.into_owned()).filter(|v| !v.is_null()) else {
                    continue;
                };
                // rv is sorted ascending; `lv OP rv` selects a contiguous window
                let first_ge = rv.partition_point(|(r, _)| order(r, &lv) == Some(Ordering::Less));
                let first_gt =
                    rv.partition_point(|(r, _)| order(r, &lv) != Some(Ordering::Greater));
                let range = match op {
                    CmpOp::Eq => first_ge..first_gt,
                    CmpOp::Lt => first_gt..rv.len(),
                    CmpOp::Le => first_ge..rv.len(),
                    CmpOp::Gt => 0..first_ge,
                    CmpOp::Ge => 0..first_gt,
                    CmpOp::Ne => 0..rv.len(),
                };
                for &(_, j) in &rv[range] {
                    if holds(l, &right[j])? {
                        pairs.push((i, j));
                    }
                }
            }
        }
        None => {
            for (i, l) in left.iter().enumerate() {
                for (j, r) in right.iter().enumerate() {
                    if holds(l, r)? {
                        pairs.push((i, j));
                    }
                }
            }
        }
    }
    pairs.sort_by(|&(i, j), &(k, m)| {
        let key = |i: usize, j: usize| (left[i].span().start(), right[j].span().start(), i, j);
        key(i, j).cmp(&key(k, m))
    });
    Ok(pairs
        .into_iter()
        .map(|(i, j)| combine(&left[i], &right[j]))
        .collect())
}

/// One copy per list item, carrying the item under `unnested_key`; ids get
/// `#<ordinal>` appended. Scalars count as one-item lists, nulls as empty.
pub fn unnest(events: Vec<Event>, nested_key: &str, unnested_key: &str) -> Vec<Event> {
    let mut out = Vec::new();
    for e in events {
        let items = match e.get(nested_key).map(|v| v.into_owned()) {
            Some(Value::List(items)) => items,
            Some(Value::Null) | None => Vec::new(),
            Some(v) => vec![v],
        };
        for (n, item) in items.into_iter().enumerate() {
            let id = EventId::new(format!("{}#{n}", e.id()));
            let mut copy = e.clone().with_identity(id, *e.span(), e.origin().clone());
            copy.set_attr(unnested_key, item);
            out.push(copy);
        }
    }
    out
}

fn default_keys(f: FnName) -> &'static [&'static str] {
    match f {
        FnName::Len => &[],
        FnName::Weekday | FnName::Year | FnName::Month | FnName::Day => &["start_date"],
        FnName::Hour => &["start_time"],
        FnName::DurationMinutes => &["start_datetime", "end_datetime"],
        FnName::DateDiffDays => &["start_date", "end_date"],
    }
}

fn temporal(v: Value, f: FnName) -> Result<Value, ExecError> {
    match v {
        Value::Text(s) => Value::parse_temporal(&s).ok_or_else(|| ExecError::FunctionDomain {
            func: f.name(),
            message: format!("{s:?} is not a date or time"),
        }),
        v => Ok(v),
    }
}

/// Applies a MAP function to one element.
pub fn apply_fn(f: &FnExpr, item: &dyn Item, group_len: Option<usize>) -> Result<Value, ExecError> {
    let keys: Vec<&str> = if f.keys.is_empty() {
        default_keys(f.name).to_vec()
    } else {
        f.keys.iter().map(String::as_str).collect()
    };
    let arg = |i: usize| -> Result<Value, ExecError> {
        let k = keys.get(i).copied().unwrap_or(default_keys(f.name)[i]);
        temporal(item.lookup(k).unwrap_or(Value::Null), f.name)
    };
    let domain = |v: &Value| ExecError::FunctionDomain {
        func: f.name.name(),
        message: format!("not defined on {}", v.type_name()),
    };
    let date_of = |v: &Value| match v {
        Value::Date(d) => Some(*d),
        Value::DateTime(dt) => Some(dt.date()),
        _ => None,
    };
    Ok(match f.name {
        FnName::Len => match group_len {
            Some(n) => Value::Int(n as i64),
            None => {
                return Err(ExecError::FunctionDomain {
                    func: "len",
                    message: "defined on groups and lists, not on single events".into(),
                })
            }
        },
        FnName::Weekday | FnName::Year | FnName::Month | FnName::Day => {
            let v = arg(0)?;
            if v.is_null() {
                return Ok(Value::Null);
            }
            let d = date_of(&v).ok_or_else(|| domain(&v))?;
            match f.name {
                FnName::Weekday => Value::text(weekday_name(d)),
                FnName::Year => Value::Int(d.year() as i64),
                FnName::Month => Value::Int(d.month() as i64),
                _ => Value::Int(d.day() as i64),
            }
        }
        FnName::Hour => match arg(0)? {
            Value::Null => Value::Null,
            Value::Time(t) => Value::Int(t.hour() as i64),
            Value::DateTime(dt) => Value::Int(dt.hour() as i64),
            other => return Err(domain(&other)),
        },
        FnName::DurationMinutes => {
            let (a, b) = (arg(0)?, arg(1)?);
            if a.is_null() || b.is_null() {
                return Ok(Value::Null);
            }
            let secs = match (&a, &b) {
                (Value::DateTime(x), Value::DateTime(y)) => (*y - *x).num_seconds(),
                (Value::Time(x), Value::Time(y)) => (*y - *x).num_seconds(),
                (Value::Date(x), Value::Date(y)) => (*y - *x).num_seconds(),
                _ => return Err(domain(&a)),
            };
            if secs % 60 == 0 {
                Value::Int(secs / 60)
            } else {
                Value::Real(secs as f64 / 60.0)
            }
        }
        FnName::DateDiffDays => {
            let (a, b) = (arg(0)?, arg(1)?);
            if a.is_null() || b.is_null() {
                return Ok(Value::Null);
            }
            let x = date_of(&a).ok_or_else(|| domain(&a))?;
            let y = date_of(&b).ok_or_else(|| domain(&b))?;
            Value::Int((y - x).num_days())
        }
    })
}

/// Exact decimal reading of a number (`5.99` is 599/100).
fn rational(v: &Value) -> Option<BigRational> {
    match v {
        Value::Int(i) => Some(BigRational::from_integer(BigInt::from(*i))),
        Value::Duration(s) => Some(BigRational::from_integer(BigInt::from(*s))),
        Value::Real(x) if x.is_finite() => {
            let s = format!("{x:e}");
            let (mantissa, exp) = s.split_once('e')?;
            let exp: i32 = exp.parse().ok()?;
            let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
            let digits = BigInt::from_str(&format!("{int}{frac}")).ok()?;
            let scale = exp - frac.len() as i32;
            let ten = BigInt::from(10);
            Some(if scale >= 0 {
                BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
            } else {
                BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
            })
        }
        _ => None,
    }
}

/// Aggregates non-null values. Also returns the indices of the values the
/// result depends on (all for sum/avg, the extremal ones for min/max).
pub fn aggregate(op: AggOp, key: &str, values: &[Value]) -> Result<(Value, Vec<usize>), ExecError> {
    let all: Vec<usize> = (0..values.len()).collect();
    match op {
        AggOp::Sum | AggOp::Avg => {
            if values.is_empty() {
                return match op {
                    AggOp::Sum => Ok((Value::Int(0), all)),
                    _ => Err(ExecError::EmptyAggregate { op: op.name() }),
                };
            }
            let mut total = BigRational::zero();
            for v in values {
                total += rational(v).ok_or_else(|| ExecError::NonNumeric(key.to_string()))?;
            }
            let all_int = values.iter().all(|v| matches!(v, Value::Int(_)));
            let all_dur = values.iter().all(|v| matches!(v, Value::Duration(_)));
            let out = if op == AggOp::Avg {
                total /= BigRational::from_integer(BigInt::from(values.len()));
                if all_dur {
                    Value::Duration(total.round().to_integer().to_i64().unwrap_or(i64::MAX))
                } else {
                    Value::Real(total.to_f64().unwrap_or(f64::NAN))
                }
            } else if all_int {
                Value::Int(
                    total
                        .to_integer()
                        .to_i64()
                        .ok_or_else(|| ExecError::NonNumeric(key.to_string()))?,
                )
            } else if all_dur {
                Value::Duration(total.to_integer().to_i64().unwrap_or(i64::MAX))
            } else {
                Value::Real(total.to_f64().unwrap_or(f64::NAN))
            };
            Ok((out, all))
        }
        AggOp::Min | AggOp::Max => {
            let Some(first) = values.first() else {
                return Err(ExecError::EmptyAggregate { op: op.name() });
            };
            let orderable = |v: &Value| {
                v.is_numeric() || matches!(v, Value::Date(_) | Value::Time(_) | Value::DateTime(_))
            };
            let mut best = first;
            for v in values {
                if !orderable(v) {
                    return Err(ExecError::NonNumeric(key.to_string()));
                }
                let ord = v
                    .compare(best)
                    .ok_or_else(|| ExecError::NonNumeric(key.to_string()))?;
                let better = if op == AggOp::Min {
                    ord == Ordering::Less
                } else {
                    ord == Ordering::Greater
                };
                if better {
                    best = v;
                }
            }
            let winners = (0..values.len())
                .filter(|&i| values[i].compare(best) == Some(Ordering::Equal))
                .collect();
            Ok((best.clone(), winners))
        }
    }
}

/// Index of the extremal candidate. Candidates are `(value, start, id)`;
/// ties go to the earliest start, then the smallest id.
pub fn arg_extreme<T: Ord>(
    op: ArgOp,
    key: &str,
    candidates: &[(Value, T, String)],
) -> Result<usize, ExecError> {
    let mut best: Option<usize> = None;
    for (i, (v, start, id)) in candidates.iter().enumerate() {
        let Some(b) = best else {
            best = Some(i);
            continue;
        };
        let (bv, bstart, bid) = &candidates[b];
        let ord = order(v, bv).ok_or_else(|| ExecError::NonNumeric(key.to_string()))?;
        let better = match (op, ord) {
            (ArgOp::Min, Ordering::Less) | (ArgOp::Max, Ordering::Greater) => true,
            (_, Ordering::Equal) => (start, id) < (bstart, bid),
            _ => false,
        };
        if better {
            best = Some(i);
        }
    }
    best.ok_or(ExecError::EmptyAggregate { op: op.name() })
}
