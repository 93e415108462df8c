use chrono::{NaiveDate, NaiveTime};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::value::Value;

/// Deeper inputs are rejected instead of risking stack exhaustion.
pub const MAX_NESTING: usize = 96;

/// Positions of a parsed node and of its children, in [`PlanNode::children`] order.
struct PosTree {
    pos: Pos,
    children: Vec<PosTree>,
}

fn flatten(tree: &PosTree, path: &mut NodePath, out: &mut SpanMap) {
    out.insert(path.clone(), tree.pos);
    for (i, c) in tree.children.iter().enumerate() {
        path.push(i);
        flatten(c, path, out);
        path.pop();
    }
}

pub fn parse_plan(text: &str) -> Result<PlanNode, ParseError> {
    parse_plan_with_spans(text).map(|(p, _)| p)
}

/// Parses a plan and reports the source position of every node.
pub fn parse_plan_with_spans(text: &str) -> Result<(PlanNode, SpanMap), ParseError> {
    let toks = tokenize(text, Pos { line: 1, col: 1 })?;
    let mut p = Parser::new(toks);
    let (plan, tree) = p.plan()?;
    p.expect_eof()?;
    let mut spans = SpanMap::new();
    flatten(&tree, &mut Vec::new(), &mut spans);
    Ok((plan, spans))
}

/// Parses a standalone FILTER predicate body (the `attr` name is bound).
pub fn parse_filter_predicate(text: &str) -> Result<PredExpr, ParseError> {
    let toks = tokenize(text, Pos { line: 1, col: 1 })?;
    let mut p = Parser::new(toks);
    p.names = vec![("attr".to_string(), Scope::Item)];
    let e = p.pred()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses a JOIN condition (`i1` and `i2` are bound).
pub fn parse_join_condition(text: &str) -> Result<PredExpr, ParseError> {
    parse_condition_at(text, Pos { line: 1, col: 1 }, 0).map(|(e, _)| e)
}

fn parse_condition_at(
    text: &str,
    origin: Pos,
    depth: usize,
) -> Result<(PredExpr, Vec<PosTree>), ParseError> {
    let toks = tokenize(text, origin)?;
    let mut p = Parser::new(toks);
    p.depth = depth;
    p.names = vec![
        ("i1".to_string(), Scope::Left),
        ("i2".to_string(), Scope::Right),
    ];
    let e = p.pred()?;
    p.expect_eof()?;
    Ok((e, p.subplans))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ArgKind {
    Plan,
    Text,
    TextList,
    Types,
    Predicate,
    Condition,
    Function,
}

fn arg_kind(name: &str) -> Option<ArgKind> {
    Some(match name {
        "l" | "l1" | "l2" => ArgKind::Plan,
        "query" | "attr_name" | "arg_attr_name" | "val_attr_name" | "nested_attr_name"
        | "unnested_attr_name" | "res_name" => ArgKind::Text,
        "attr_names" => ArgKind::TextList,
        "attr_types" => ArgKind::Types,
        "filter" => ArgKind::Predicate,
        "condition" => ArgKind::Condition,
        "fct" => ArgKind::Function,
        _ => return None,
    })
}

/// (required, optional) keyword arguments per operator.
fn signature(op: &str) -> Option<(&'static [&'static str], &'static [&'static str])> {
    Some(match op {
        "RETRIEVE" => (&["query"], &["l"]),
        "EXTRACT" => (&["l", "attr_names", "attr_types"], &[]),
        "JOIN" => (&["l1", "l2", "condition"], &[]),
        "GROUP_BY" => (&["l", "attr_names"], &[]),
        "FILTER" => (&["l", "filter"], &[]),
        "MAP" => (&["l", "fct"], &["res_name"]),
        "APPLY" => (&["l", "fct"], &[]),
        "UNNEST" => (&["l", "nested_attr_name", "unnested_attr_name"], &[]),
        "ARGMIN" | "ARGMAX" => (&["l", "arg_attr_name"], &["val_attr_name"]),
        "SUM" | "AVG" | "MIN" | "MAX" => (&["l", "attr_name"], &[]),
        _ => return None,
    })
}

pub(crate) fn is_operator_name(name: &str) -> bool {
    name == "QUD" || signature(name).is_some()
}

enum Arg {
    Plan(PlanNode, PosTree),
    Text(String),
    TextList(Vec<String>),
    Types(Vec<TypeTag>),
    Pred(PredExpr, Vec<PosTree>),
    Function(FnExpr),
}

struct Args {
    op: String,
    pos: Pos,
    items: Vec<(String, Arg)>,
}

impl Args {
    fn take(&mut self, key: &str) -> Option<Arg> {
        let i = self.items.iter().position(|(k, _)| k == key)?;
        Some(self.items.remove(i).1)
    }

    fn plan(&mut self, key: &str) -> (PlanNode, PosTree) {
        match self.take(key) {
            Some(Arg::Plan(p, t)) => (p, t),
            _ => unreachable!("signature checked"),
        }
    }

    fn text(&mut self, key: &str) -> Option<String> {
        match self.take(key) {
            Some(Arg::Text(s)) => Some(s),
            _ => None,
        }
    }

    fn text_list(&mut self, key: &str) -> Vec<String> {
        match self.take(key) {
            Some(Arg::TextList(v)) => v,
            _ => unreachable!("signature checked"),
        }
    }

    fn function(&mut self, key: &str) -> FnExpr {
        match self.take(key) {
            Some(Arg::Function(f)) => f,
            _ => unreachable!("signature checked"),
        }
    }

    fn pred(&mut self, key: &str) -> (PredExpr, Vec<PosTree>) {
        match self.take(key) {
            Some(Arg::Pred(p, t)) => (p, t),
            _ => unreachable!("signature checked"),
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    depth: usize,
    /// Names bound by the enclosing lambda or join condition.
    names: Vec<(String, Scope)>,
    /// Positions of nested plans met while parsing the current predicate.
    subplans: Vec<PosTree>,
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser {
            toks,
            i: 0,
            depth: 0,
            names: Vec::new(),
            subplans: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let j = (self.i + n).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        self.syntax_at(self.pos(), message)
    }

    fn syntax_at(&self, pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }

    fn unknown(&self, pos: Pos, name: impl Into<String>) -> ParseError {
        ParseError::UnknownFunction {
            line: pos.line,
            col: pos.col,
            name: name.into(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.syntax(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            t => Err(self.syntax(format!(
                "unexpected {} after end of expression",
                t.describe()
            ))),
        }
    }

    fn expect_str(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            t => Err(self.syntax(format!("expected string literal, found {}", t.describe()))),
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => Err(self.syntax(format!("expected name, found {}", t.describe()))),
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name)
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(self.syntax("expression nested too deeply"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    // ---- plans ----

    fn plan(&mut self) -> Result<(PlanNode, PosTree), ParseError> {
        self.enter()?;
        let r = self.plan_inner();
        self.leave();
        r
    }

    fn plan_inner(&mut self) -> Result<(PlanNode, PosTree), ParseError> {
        if *self.peek() == Tok::LDouble {
            self.bump();
            let r = self.plan()?;
            self.expect(Tok::RDouble)?;
            return Ok(r);
        }
        let pos = self.pos();
        let name = match self.peek().clone() {
            Tok::Ident(name) => name,
            t => return Err(self.syntax(format!("expected an operator, found {}", t.describe()))),
        };
        self.bump();
        if name == "QUD" {
            self.expect(Tok::LParen)?;
            if self.is_ident("question") && *self.peek_at(1) == Tok::Assign {
                self.bump();
                self.bump();
            }
            let question = self.expect_str()?;
            if *self.peek() == Tok::Comma {
                self.bump();
            }
            self.expect(Tok::RParen)?;
            let tree = PosTree {
                pos,
                children: Vec::new(),
            };
            return Ok((PlanNode::QudCall { question }, tree));
        }
        let Some((required, optional)) = signature(&name) else {
            return Err(if *self.peek() == Tok::LParen {
                self.unknown(pos, name)
            } else {
                self.syntax_at(pos, format!("expected an operator, found `{name}`"))
            });
        };
        self.expect(Tok::LParen)?;
        let mut args = Args {
            op: name.clone(),
            pos,
            items: Vec::new(),
        };
        while *self.peek() != Tok::RParen {
            let key_pos = self.pos();
            let key = match (self.peek().clone(), self.peek_at(1)) {
                (Tok::Ident(k), Tok::Assign) => k,
                _ => {
                    return Err(self.syntax(format!(
                        "{name}: expected a keyword argument (`name=value`)"
                    )))
                }
            };
            self.bump();
            self.bump();
            let kind = arg_kind(&key);
            if kind.is_none()
                || !(required.contains(&key.as_str()) || optional.contains(&key.as_str()))
            {
                return Err(ParseError::Arity {
                    line: key_pos.line,
                    col: key_pos.col,
                    operator: name.clone(),
                    message: format!("unexpected argument `{key}`"),
                });
            }
            if args.items.iter().any(|(k, _)| *k == key) {
                return Err(ParseError::Arity {
                    line: key_pos.line,
                    col: key_pos.col,
                    operator: name.clone(),
                    message: format!("argument `{key}` given twice"),
                });
            }
            let value = self.arg_value(kind.expect("checked above"))?;
            args.items.push((key, value));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else if *self.peek() != Tok::RParen {
                return Err(self.syntax(format!(
                    "expected `,` or `)`, found {}",
                    self.peek().describe()
                )));
            }
        }
        self.bump();
        for req in required {
            if !args.items.iter().any(|(k, _)| k == req) {
                return Err(ParseError::Arity {
                    line: pos.line,
                    col: pos.col,
                    operator: name.clone(),
                    message: format!("missing argument `{req}`"),
                });
            }
        }
        self.build(args)
    }

    fn arg_value(&mut self, kind: ArgKind) -> Result<Arg, ParseError> {
        Ok(match kind {
            ArgKind::Plan => {
                let (p, t) = self.plan()?;
                Arg::Plan(p, t)
            }
            ArgKind::Text => Arg::Text(self.expect_str()?),
            ArgKind::TextList => {
                self.expect(Tok::LBracket)?;
                let mut items = Vec::new();
                while *self.peek() != Tok::RBracket {
                    items.push(self.expect_str()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else if *self.peek() != Tok::RBracket {
                        return Err(self.syntax("expected `,` or `]`"));
                    }
                }
                self.bump();
                Arg::TextList(items)
            }
            ArgKind::Types => {
                self.expect(Tok::LBracket)?;
                let mut items = Vec::new();
                while *self.peek() != Tok::RBracket {
                    let pos = self.pos();
                    let mut name = match self.bump() {
                        Tok::Ident(s) | Tok::Str(s) => s,
                        t => {
                            return Err(self.syntax_at(
                                pos,
                                format!("expected a type, found {}", t.describe()),
                            ))
                        }
                    };
                    while *self.peek() == Tok::Dot {
                        self.bump();
                        name.push('.');
                        name.push_str(&self.expect_ident()?);
                    }
                    items.push(
                        name.parse::<TypeTag>()
                            .map_err(|_| self.unknown(pos, name))?,
                    );
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else if *self.peek() != Tok::RBracket {
                        return Err(self.syntax("expected `,` or `]`"));
                    }
                }
                self.bump();
                Arg::Types(items)
            }
            ArgKind::Predicate => {
                let mut param = "attr".to_string();
                if self.is_ident("lambda") {
                    self.bump();
                    param = self.expect_ident()?;
                    self.expect(Tok::Colon)?;
                }
                let saved_names = std::mem::replace(&mut self.names, vec![(param, Scope::Item)]);
                let saved_subs = std::mem::take(&mut self.subplans);
                let e = self.pred();
                self.names = saved_names;
                let subs = std::mem::replace(&mut self.subplans, saved_subs);
                Arg::Pred(e?, subs)
            }
            ArgKind::Condition => {
                let pos = self.pos();
                let text = self.expect_str()?;
                let origin = Pos {
                    line: pos.line,
                    col: pos.col + 1,
                };
                let (e, subs) = parse_condition_at(&text, origin, self.depth)?;
                Arg::Pred(e, subs)
            }
            ArgKind::Function => {
                let pos = self.pos();
                if self.is_ident("lambda") {
                    return Err(self.syntax("fct= takes a builtin function name such as `len`"));
                }
                let name = self.expect_ident()?;
                let func = FnName::lookup(&name).ok_or_else(|| self.unknown(pos, name.clone()))?;
                let mut keys = Vec::new();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    while *self.peek() != Tok::RParen {
                        keys.push(self.expect_str()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else if *self.peek() != Tok::RParen {
                            return Err(self.syntax("expected `,` or `)`"));
                        }
                    }
                    self.bump();
                }
                if keys.len() > func.max_keys() {
                    return Err(ParseError::Arity {
                        line: pos.line,
                        col: pos.col,
                        operator: name,
                        message: format!(
                            "takes at most {} key(s), got {}",
                            func.max_keys(),
                            keys.len()
                        ),
                    });
                }
                Arg::Function(FnExpr { name: func, keys })
            }
        })
    }

    fn build(&mut self, mut a: Args) -> Result<(PlanNode, PosTree), ParseError> {
        let pos = a.pos;
        let mut children = Vec::new();
        let input = |a: &mut Args, key: &str, children: &mut Vec<PosTree>| {
            let (p, t) = a.plan(key);
            children.push(t);
            Box::new(p)
        };
        let node = match a.op.as_str() {
            "RETRIEVE" => {
                let query = a.text("query").expect("required");
                let input = match a.take("l") {
                    Some(Arg::Plan(p, t)) => {
                        children.push(t);
                        Some(Box::new(p))
                    }
                    _ => None,
                };
                PlanNode::Retrieve { query, input }
            }
            "EXTRACT" => {
                let input = input(&mut a, "l", &mut children);
                let keys = a.text_list("attr_names");
                let types = match a.take("attr_types") {
                    Some(Arg::Types(t)) => t,
                    _ => unreachable!("signature checked"),
                };
                PlanNode::Extract { input, keys, types }
            }
            "JOIN" => {
                let left = input(&mut a, "l1", &mut children);
                let right = input(&mut a, "l2", &mut children);
                let (condition, subs) = a.pred("condition");
                children.extend(subs);
                PlanNode::Join {
                    left,
                    right,
                    condition,
                }
            }
            "GROUP_BY" => {
                let input = input(&mut a, "l", &mut children);
                PlanNode::GroupBy {
                    input,
                    keys: a.text_list("attr_names"),
                }
            }
            "FILTER" => {
                let input = input(&mut a, "l", &mut children);
                let (predicate, subs) = a.pred("filter");
                children.extend(subs);
                PlanNode::Filter { input, predicate }
            }
            "MAP" => {
                let input = input(&mut a, "l", &mut children);
                PlanNode::Map {
                    input,
                    func: a.function("fct"),
                    res_name: a
                        .text("res_name")
                        .unwrap_or_else(|| DEFAULT_MAP_RESULT.to_string()),
                }
            }
            "APPLY" => {
                let input = input(&mut a, "l", &mut children);
                PlanNode::Apply {
                    input,
                    func: a.function("fct"),
                }
            }
            "UNNEST" => {
                let input = input(&mut a, "l", &mut children);
                PlanNode::Unnest {
                    input,
                    nested_key: a.text("nested_attr_name").expect("required"),
                    unnested_key: a.text("unnested_attr_name").expect("required"),
                }
            }
            "ARGMIN" | "ARGMAX" => {
                let op = if a.op == "ARGMIN" {
                    ArgOp::Min
                } else {
                    ArgOp::Max
                };
                let input = input(&mut a, "l", &mut children);
                PlanNode::Arg {
                    op,
                    input,
                    arg_key: a.text("arg_attr_name").expect("required"),
                    val_key: a.text("val_attr_name"),
                }
            }
            agg => {
                let op = match agg {
                    "SUM" => AggOp::Sum,
                    "AVG" => AggOp::Avg,
                    "MIN" => AggOp::Min,
                    _ => AggOp::Max,
                };
                let input = input(&mut a, "l", &mut children);
                PlanNode::Aggregate {
                    op,
                    input,
                    key: a.text("attr_name").expect("required"),
                }
            }
        };
        Ok((node, PosTree { pos, children }))
    }

    // ---- predicates ----

    fn pred(&mut self) -> Result<PredExpr, ParseError> {
        self.enter()?;
        let r = self.or_expr();
        self.leave();
        r
    }

    fn or_expr(&mut self) -> Result<PredExpr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.is_ident("or") {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = PredExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<PredExpr, ParseError> {
        let mut lhs = self.not_expr()?;
        while self.is_ident("and") {
            self.bump();
            let rhs = self.not_expr()?;
            lhs = PredExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<PredExpr, ParseError> {
        if self.is_ident("not") {
            self.bump();
            self.enter()?;
            let inner = self.not_expr();
            self.leave();
            return Ok(PredExpr::Not(Box::new(inner?)));
        }
        self.comparison()
    }

    fn cmp_op(&self) -> Option<(CmpOp, usize)> {
        Some(match self.peek() {
            Tok::Eq | Tok::Assign => (CmpOp::Eq, 1),
            Tok::Ne => (CmpOp::Ne, 1),
            Tok::Lt => (CmpOp::Lt, 1),
            Tok::Le => (CmpOp::Le, 1),
            Tok::Gt => (CmpOp::Gt, 1),
            Tok::Ge => (CmpOp::Ge, 1),
            _ => return None,
        })
    }

    fn comparison(&mut self) -> Result<PredExpr, ParseError> {
        let lhs = self.arith()?;
        let result = if let Some((op, n)) = self.cmp_op() {
            for _ in 0..n {
                self.bump();
            }
            let rhs = self.arith()?;
            PredExpr::cmp(op, lhs, rhs)
        } else if self.is_ident("in") {
            self.bump();
            let haystack = self.arith()?;
            PredExpr::In {
                needle: Box::new(lhs),
                haystack: Box::new(haystack),
            }
        } else if self.is_ident("not") && matches!(self.peek_at(1), Tok::Ident(s) if s == "in") {
            self.bump();
            self.bump();
            let haystack = self.arith()?;
            PredExpr::Not(Box::new(PredExpr::In {
                needle: Box::new(lhs),
                haystack: Box::new(haystack),
            }))
        } else {
            return Ok(lhs);
        };
        if self.cmp_op().is_some() || self.is_ident("in") {
            return Err(
                self.syntax("chained comparisons are not supported; combine them with `and`")
            );
        }
        Ok(result)
    }

    fn arith(&mut self) -> Result<PredExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = PredExpr::Arith {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn unary(&mut self) -> Result<PredExpr, ParseError> {
        if *self.peek() == Tok::Minus {
            let pos = self.pos();
            self.bump();
            return match self.bump() {
                Tok::Int(n) => Ok(PredExpr::Lit(Value::Int(-n))),
                Tok::Float(x) => Ok(PredExpr::Lit(Value::Real(-x))),
                _ => Err(self.syntax_at(pos, "unary minus only applies to number literals")),
            };
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<PredExpr, ParseError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            let pos = self.pos();
            let name = self.expect_ident()?;
            let call = *self.peek() == Tok::LParen;
            if call {
                self.bump();
                self.expect(Tok::RParen)?;
            }
            e = if name == "lower" && call {
                PredExpr::Lower(Box::new(e))
            } else if let Some(acc) = Accessor::lookup(&name) {
                PredExpr::access(e, acc)
            } else {
                return Err(self.unknown(pos, format!(".{name}")));
            };
        }
        if *self.peek() == Tok::LBracket {
            return Err(self.syntax("indexing is only allowed on the item name"));
        }
        Ok(e)
    }

    fn literal_list(&mut self) -> Result<PredExpr, ParseError> {
        self.bump();
        let mut items = Vec::new();
        while *self.peek() != Tok::RBracket {
            let pos = self.pos();
            match self.unary()? {
                PredExpr::Lit(v) if !matches!(v, Value::List(_)) => items.push(v),
                _ => {
                    return Err(
                        self.syntax_at(pos, "list literals may only contain scalar literals")
                    )
                }
            }
            if *self.peek() == Tok::Comma {
                self.bump();
            } else if *self.peek() != Tok::RBracket {
                return Err(self.syntax("expected `,` or `]`"));
            }
        }
        self.bump();
        Ok(PredExpr::Lit(Value::List(items)))
    }

    fn subplan(&mut self) -> Result<PredExpr, ParseError> {
        let (plan, tree) = self.plan()?;
        self.subplans.push(tree);
        if *self.peek() == Tok::Dot && matches!(self.peek_at(1), Tok::Ident(s) if s == "result") {
            self.bump();
            self.bump();
        }
        Ok(PredExpr::SubPlan(Box::new(plan)))
    }

    fn call_args(&mut self) -> Result<Vec<PredExpr>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        while *self.peek() != Tok::RParen {
            args.push(self.pred()?);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else if *self.peek() != Tok::RParen {
                return Err(self.syntax("expected `,` or `)`"));
            }
        }
        self.bump();
        Ok(args)
    }

    fn int_args(&mut self, name: &str, min: usize, max: usize) -> Result<Vec<u32>, ParseError> {
        let pos = self.pos();
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        while *self.peek() != Tok::RParen {
            match self.bump() {
                Tok::Int(n) if (0..=u32::MAX as i64).contains(&n) => out.push(n as u32),
                t => {
                    return Err(self.syntax(format!(
                        "{name}: expected an integer, found {}",
                        t.describe()
                    )))
                }
            }
            if *self.peek() == Tok::Comma {
                self.bump();
            } else if *self.peek() != Tok::RParen {
                return Err(self.syntax("expected `,` or `)`"));
            }
        }
        self.bump();
        if out.len() < min || out.len() > max {
            return Err(ParseError::Arity {
                line: pos.line,
                col: pos.col,
                operator: name.to_string(),
                message: format!("expects {min} to {max} integers"),
            });
        }
        Ok(out)
    }

    fn temporal_ctor(&mut self, kind: &str, pos: Pos) -> Result<PredExpr, ParseError> {
        let bad = |p: &Parser| p.syntax_at(pos, format!("invalid {kind} literal"));
        let value = match kind {
            "date" => {
                let a = self.int_args(kind, 3, 3)?;
                Value::Date(
                    NaiveDate::from_ymd_opt(a[0] as i32, a[1], a[2]).ok_or_else(|| bad(self))?,
                )
            }
            "time" => {
                let a = self.int_args(kind, 2, 3)?;
                Value::Time(
                    NaiveTime::from_hms_opt(a[0], a[1], a.get(2).copied().unwrap_or(0))
                        .ok_or_else(|| bad(self))?,
                )
            }
            _ => {
                let a = self.int_args(kind, 3, 6)?;
                let d =
                    NaiveDate::from_ymd_opt(a[0] as i32, a[1], a[2]).ok_or_else(|| bad(self))?;
                let g = |i: usize| a.get(i).copied().unwrap_or(0);
                Value::DateTime(d.and_hms_opt(g(3), g(4), g(5)).ok_or_else(|| bad(self))?)
            }
        };
        Ok(PredExpr::Lit(value))
    }

    fn period(&mut self, name: &str) -> Result<PredExpr, ParseError> {
        let pos = self.pos();
        self.expect(Tok::LParen)?;
        let mut parts: Vec<(PeriodUnit, i64)> = Vec::new();
        while *self.peek() != Tok::RParen {
            let upos = self.pos();
            let unit = self.expect_ident()?;
            let unit = PeriodUnit::lookup(&unit)
                .ok_or_else(|| self.syntax_at(upos, format!("{name}: unknown unit `{unit}`")))?;
            self.expect(Tok::Assign)?;
            let n = match self.unary()? {
                PredExpr::Lit(Value::Int(n)) => n,
                _ => {
                    return Err(self.syntax_at(upos, format!("{name}: expected an integer amount")))
                }
            };
            if parts.iter().any(|(u, _)| *u == unit) {
                return Err(
                    self.syntax_at(upos, format!("{name}: unit `{}` given twice", unit.name()))
                );
            }
            parts.push((unit, n));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else if *self.peek() != Tok::RParen {
                return Err(self.syntax("expected `,` or `)`"));
            }
        }
        self.bump();
        if parts.is_empty() {
            return Err(ParseError::Arity {
                line: pos.line,
                col: pos.col,
                operator: name.to_string(),
                message: "needs at least one unit".into(),
            });
        }
        parts.sort_by_key(|(u, _)| *u);
        Ok(PredExpr::Period(parts))
    }

    /// `any(<needle> in p[.lower()] for p in <list>)`.
    fn any_comprehension(&mut self) -> Result<PredExpr, ParseError> {
        self.expect(Tok::LParen)?;
        let mark = self.subplans.len();
        let needle = self.arith()?;
        let needle_end = self.subplans.len();
        if !self.is_ident("in") {
            return Err(self.syntax("any(...) must have the form `any(x in p for p in list)`"));
        }
        self.bump();
        let var_pos = self.pos();
        let var = self.expect_ident()?;
        let mut fold_case = false;
        if *self.peek() == Tok::Dot {
            self.bump();
            if !self.is_ident("lower") {
                return Err(self.syntax("only `.lower()` may follow the loop variable"));
            }
            self.bump();
            self.expect(Tok::LParen)?;
            self.expect(Tok::RParen)?;
            fold_case = true;
        }
        if !self.is_ident("for") {
            return Err(self.syntax("expected `for`"));
        }
        self.bump();
        let var2 = self.expect_ident()?;
        if var2 != var {
            return Err(self.syntax_at(
                var_pos,
                format!("loop variable `{var2}` does not match `{var}`"),
            ));
        }
        if !self.is_ident("in") {
            return Err(self.syntax("expected `in`"));
        }
        self.bump();
        let list = self.arith()?;
        self.expect(Tok::RParen)?;
        // keep nested-plan positions in children order (list before needle)
        self.subplans[mark..].rotate_left(needle_end - mark);
        Ok(PredExpr::AnyContains {
            list: Box::new(list),
            needle: Box::new(needle),
            fold_case,
        })
    }

    fn primary(&mut self) -> Result<PredExpr, ParseError> {
        self.enter()?;
        let r = self.primary_inner();
        self.leave();
        r
    }

    fn primary_inner(&mut self) -> Result<PredExpr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(PredExpr::Lit(Value::Text(s)))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(PredExpr::Lit(Value::Int(n)))
            }
            Tok::Float(x) => {
                self.bump();
                Ok(PredExpr::Lit(Value::Real(x)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.pred()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => self.literal_list(),
            Tok::LDouble => self.subplan(),
            Tok::Ident(name) => self.named(name, pos),
            t => Err(self.syntax(format!("expected an expression, found {}", t.describe()))),
        }
    }

    fn named(&mut self, name: String, pos: Pos) -> Result<PredExpr, ParseError> {
        if let Some(scope) = self
            .names
            .iter()
            .rev()
            .find(|(n, _)| *n == name)
            .map(|(_, s)| *s)
        {
            self.bump();
            return match self.peek().clone() {
                Tok::LBracket => {
                    self.bump();
                    let key = self.expect_str()?;
                    self.expect(Tok::RBracket)?;
                    Ok(PredExpr::Attr { scope, key })
                }
                Tok::Dot if scope != Scope::Item => {
                    self.bump();
                    let key = self.expect_ident()?;
                    Ok(PredExpr::Attr { scope, key })
                }
                _ => Err(self.syntax(format!(
                    "`{name}` must be indexed with a key, e.g. {name}[\"start_date\"]"
                ))),
            };
        }
        if is_operator_name(&name) && *self.peek_at(1) == Tok::LParen {
            return self.subplan();
        }
        self.bump();
        let simple = match name.as_str() {
            "True" | "true" => Some(Value::Bool(true)),
            "False" | "false" => Some(Value::Bool(false)),
            "None" | "null" => Some(Value::Null),
            _ => None,
        };
        if let Some(v) = simple {
            return Ok(PredExpr::Lit(v));
        }
        // `date.today()`, `datetime.now()`, `date.fromisoformat("...")`
        if matches!(name.as_str(), "date" | "time" | "datetime") && *self.peek() == Tok::Dot {
            self.bump();
            let mpos = self.pos();
            let method = self.expect_ident()?;
            return match method.as_str() {
                "today" | "now" => {
                    self.expect(Tok::LParen)?;
                    self.expect(Tok::RParen)?;
                    Ok(if name == "date" || method == "today" {
                        PredExpr::Today
                    } else {
                        PredExpr::Now
                    })
                }
                "fromisoformat" => {
                    self.expect(Tok::LParen)?;
                    let spos = self.pos();
                    let text = self.expect_str()?;
                    self.expect(Tok::RParen)?;
                    let v = Value::parse_temporal(&text)
                        .filter(|v| {
                            v.type_name() == name || (name == "datetime" && v.type_name() == "date")
                        })
                        .ok_or_else(|| self.syntax_at(spos, format!("invalid {name} `{text}`")))?;
                    Ok(PredExpr::Lit(match v {
                        Value::Date(d) if name == "datetime" => {
                            Value::DateTime(crate::event::at_midnight(d))
                        }
                        v => v,
                    }))
                }
                _ => Err(self.unknown(mpos, format!("{name}.{method}"))),
            };
        }
        if *self.peek() != Tok::LParen {
            return Err(self.syntax_at(pos, format!("unknown name `{name}`")));
        }
        match name.as_str() {
            "today" | "now" => {
                self.bump();
                self.expect(Tok::RParen)?;
                Ok(if name == "today" {
                    PredExpr::Today
                } else {
                    PredExpr::Now
                })
            }
            "date" | "time" | "datetime" => self.temporal_ctor(&name, pos),
            "relativedelta" | "timedelta" | "period" => self.period(&name),
            "any" => self.any_comprehension(),
            "len" | "lower" => {
                let args = self.call_args()?;
                let [arg] =
                    <[PredExpr; 1]>::try_from(args).map_err(|_| self.arity(pos, &name, 1))?;
                Ok(if name == "len" {
                    PredExpr::Len(Box::new(arg))
                } else {
                    PredExpr::Lower(Box::new(arg))
                })
            }
            "contains" | "any_contains" => {
                let mark = self.subplans.len();
                let args = self.call_args()?;
                debug_assert!(self.subplans.len() >= mark);
                let [a, b] =
                    <[PredExpr; 2]>::try_from(args).map_err(|_| self.arity(pos, &name, 2))?;
                Ok(if name == "contains" {
                    PredExpr::Contains {
                        haystack: Box::new(a),
                        needle: Box::new(b),
                    }
                } else {
                    PredExpr::AnyContains {
                        list: Box::new(a),
                        needle: Box::new(b),
                        fold_case: false,
                    }
                })
            }
            _ => Err(self.unknown(pos, name)),
        }
    }

    fn arity(&self, pos: Pos, name: &str, n: usize) -> ParseError {
        ParseError::Arity {
            line: pos.line,
            col: pos.col,
            operator: name.to_string(),
            message: format!("expects {n} argument(s)"),
        }
    }
}
