use std::fmt::Write;

use chrono::{Datelike, Timelike};

use super::ast::*;
use crate::value::Value;

/// Canonical single-line rendering; parses back to an equal tree.
pub fn render_plan(plan: &PlanNode) -> String {
    let mut out = String::new();
    plan_into(plan, &mut out);
    out
}

pub fn render_predicate(expr: &PredExpr) -> String {
    let mut out = String::new();
    pred_into(expr, 1, &mut out);
    out
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn text_list(items: &[String]) -> String {
    let inner: Vec<String> = items.iter().map(|s| quote(s)).collect();
    format!("[{}]", inner.join(", "))
}

fn fn_expr(f: &FnExpr) -> String {
    if f.keys.is_empty() {
        f.name.name().to_string()
    } else {
        let keys: Vec<String> = f.keys.iter().map(|k| quote(k)).collect();
        format!("{}({})", f.name.name(), keys.join(", "))
    }
}

fn plan_into(plan: &PlanNode, out: &mut String) {
    let l = |p: &PlanNode| render_plan(p);
    let s = match plan {
        PlanNode::QudCall { question } => format!("QUD({})", quote(question)),
        PlanNode::Retrieve { query, input } => match input {
            Some(i) => format!("RETRIEVE(query={}, l={})", quote(query), l(i)),
            None => format!("RETRIEVE(query={})", quote(query)),
        },
        PlanNode::Extract { input, keys, types } => {
            let types: Vec<&str> = types.iter().map(|t| t.name()).collect();
            format!(
                "EXTRACT(l={}, attr_names={}, attr_types=[{}])",
                l(input),
                text_list(keys),
                types.join(", ")
            )
        }
        PlanNode::Join {
            left,
            right,
            condition,
        } => format!(
            "JOIN(l1={}, l2={}, condition={})",
            l(left),
            l(right),
            quote(&render_predicate(condition))
        ),
        PlanNode::GroupBy { input, keys } => {
            format!("GROUP_BY(l={}, attr_names={})", l(input), text_list(keys))
        }
        PlanNode::Filter { input, predicate } => format!(
            "FILTER(l={}, filter=lambda attr: {})",
            l(input),
            render_predicate(predicate)
        ),
        PlanNode::Map {
            input,
            func,
            res_name,
        } => format!(
            "MAP(l={}, fct={}, res_name={})",
            l(input),
            fn_expr(func),
            quote(res_name)
        ),
        PlanNode::Apply { input, func } => format!("APPLY(l={}, fct={})", l(input), fn_expr(func)),
        PlanNode::Unnest {
            input,
            nested_key,
            unnested_key,
        } => format!(
            "UNNEST(l={}, nested_attr_name={}, unnested_attr_name={})",
            l(input),
            quote(nested_key),
            quote(unnested_key)
        ),
        PlanNode::Arg {
            op,
            input,
            arg_key,
            val_key,
        } => match val_key {
            Some(v) => format!(
                "{}(l={}, arg_attr_name={}, val_attr_name={})",
                op.name(),
                l(input),
                quote(arg_key),
                quote(v)
            ),
            None => format!(
                "{}(l={}, arg_attr_name={})",
                op.name(),
                l(input),
                quote(arg_key)
            ),
        },
        PlanNode::Aggregate { op, input, key } => {
            format!("{}(l={}, attr_name={})", op.name(), l(input), quote(key))
        }
    };
    out.push_str(&s);
}

const OR: u8 = 1;
const AND: u8 = 2;
const NOT: u8 = 3;
const CMP: u8 = 4;
const ARITH: u8 = 5;
const NEG: u8 = 6;
const ATOM: u8 = 7;

fn is_identifier(key: &str) -> bool {
    let mut chars = key.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

fn lit_prec(v: &Value) -> u8 {
    match v {
        Value::Int(n) if *n < 0 => NEG,
        Value::Real(x) if x.is_sign_negative() => NEG,
        _ => ATOM,
    }
}

fn prec(e: &PredExpr) -> u8 {
    match e {
        PredExpr::Or(..) => OR,
        PredExpr::And(..) => AND,
        PredExpr::Not(_) => NOT,
        PredExpr::Compare { .. } | PredExpr::In { .. } => CMP,
        PredExpr::Arith { .. } => ARITH,
        PredExpr::Lit(v) => lit_prec(v),
        _ => ATOM,
    }
}

fn literal(v: &Value) -> String {
    match v {
        Value::Null => "None".into(),
        Value::Bool(true) => "True".into(),
        Value::Bool(false) => "False".into(),
        Value::Text(s) => quote(s),
        Value::Int(n) => n.to_string(),
        Value::Real(x) => {
            let s = format!("{x:?}");
            if s.contains(['.', 'e', 'E']) || !x.is_finite() {
                s
            } else {
                format!("{s}.0")
            }
        }
        Value::Date(d) => format!("date({}, {}, {})", d.year(), d.month(), d.day()),
        Value::Time(t) => format!("time({}, {}, {})", t.hour(), t.minute(), t.second()),
        Value::DateTime(dt) => format!(
            "datetime({}, {}, {}, {}, {}, {})",
            dt.year(),
            dt.month(),
            dt.day(),
            dt.hour(),
            dt.minute(),
            dt.second()
        ),
        Value::Duration(s) => format!("relativedelta(seconds={s})"),
        Value::List(items) => {
            let inner: Vec<String> = items.iter().map(literal).collect();
            format!("[{}]", inner.join(", "))
        }
    }
}

fn pred_into(e: &PredExpr, min: u8, out: &mut String) {
    let paren = prec(e) < min;
    if paren {
        out.push('(');
    }
    match e {
        PredExpr::Attr { scope, key } => match scope {
            Scope::Item => {
                let _ = write!(out, "attr[{}]", quote(key));
            }
            Scope::Left | Scope::Right => {
                let name = if *scope == Scope::Left { "i1" } else { "i2" };
                if is_identifier(key) {
                    let _ = write!(out, "{name}.{key}");
                } else {
                    let _ = write!(out, "{name}[{}]", quote(key));
                }
            }
        },
        PredExpr::Lit(v) => out.push_str(&literal(v)),
        PredExpr::Compare { op, lhs, rhs } => {
            pred_into(lhs, ARITH, out);
            let _ = write!(out, " {} ", op.symbol());
            pred_into(rhs, ARITH, out);
        }
        PredExpr::In { needle, haystack } => {
            pred_into(needle, ARITH, out);
            out.push_str(" in ");
            pred_into(haystack, ARITH, out);
        }
        PredExpr::And(a, b) => {
            pred_into(a, AND, out);
            out.push_str(" and ");
            pred_into(b, AND + 1, out);
        }
        PredExpr::Or(a, b) => {
            pred_into(a, OR, out);
            out.push_str(" or ");
            pred_into(b, OR + 1, out);
        }
        PredExpr::Not(inner) => {
            out.push_str("not ");
            pred_into(inner, NOT, out);
        }
        PredExpr::Arith { op, lhs, rhs } => {
            pred_into(lhs, ARITH, out);
            out.push_str(if *op == ArithOp::Add { " + " } else { " - " });
            pred_into(rhs, NEG, out);
        }
        PredExpr::Lower(inner) => {
            pred_into(inner, ATOM, out);
            out.push_str(".lower()");
        }
        PredExpr::Access { expr, accessor } => {
            pred_into(expr, ATOM, out);
            out.push('.');
            out.push_str(accessor.name());
            if accessor.is_method() {
                out.push_str("()");
            }
        }
        PredExpr::Len(inner) => {
            out.push_str("len(");
            pred_into(inner, OR, out);
            out.push(')');
        }
        PredExpr::Contains { haystack, needle } => {
            out.push_str("contains(");
            pred_into(haystack, OR, out);
            out.push_str(", ");
            pred_into(needle, OR, out);
            out.push(')');
        }
        PredExpr::AnyContains {
            list,
            needle,
            fold_case,
        } => {
            if *fold_case {
                out.push_str("any(");
                pred_into(needle, ARITH, out);
                out.push_str(" in p.lower() for p in ");
                pred_into(list, ARITH, out);
                out.push(')');
            } else {
                out.push_str("any_contains(");
                pred_into(list, OR, out);
                out.push_str(", ");
                pred_into(needle, OR, out);
                out.push(')');
            }
        }
        PredExpr::Today => out.push_str("date.today()"),
        PredExpr::Now => out.push_str("datetime.now()"),
        PredExpr::Period(parts) => {
            let inner: Vec<String> = parts
                .iter()
                .map(|(u, n)| format!("{}={n}", u.name()))
                .collect();
            let _ = write!(out, "relativedelta({})", inner.join(", "));
        }
        PredExpr::SubPlan(plan) => {
            plan_into(plan, out);
            out.push_str(".result");
        }
    }
    if paren {
        out.push(')');
    }
}
