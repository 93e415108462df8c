use std::fmt;
use std::str::FromStr;

use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeTag {
    Str,
    Int,
    Float,
    Date,
    Time,
    DateTime,
    List,
}

impl TypeTag {
    pub const ALL: [TypeTag; 7] = [
        TypeTag::Str,
        TypeTag::Int,
        TypeTag::Float,
        TypeTag::Date,
        TypeTag::Time,
        TypeTag::DateTime,
        TypeTag::List,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TypeTag::Str => "str",
            TypeTag::Int => "int",
            TypeTag::Float => "float",
            TypeTag::Date => "date",
            TypeTag::Time => "time",
            TypeTag::DateTime => "datetime",
            TypeTag::List => "list",
        }
    }

    pub fn is_temporal(self) -> bool {
        matches!(self, TypeTag::Date | TypeTag::Time | TypeTag::DateTime)
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, TypeTag::Int | TypeTag::Float)
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TypeTag {
    type Err = ();

    /// Accepts the short names and the constructor spellings used in
    /// generated plans (`date.fromisoformat`, `datetime.fromtimestamp`, ...).
    fn from_str(s: &str) -> Result<Self, ()> {
        let s = s.trim();
        let base = match s.split_once('.') {
            Some((head, "fromisoformat" | "fromtimestamp")) => head,
            Some(_) => return Err(()),
            None => s,
        };
        Ok(match base {
            "str" => TypeTag::Str,
            "int" => TypeTag::Int,
            "float" => TypeTag::Float,
            "date" => TypeTag::Date,
            "time" => TypeTag::Time,
            "datetime" => TypeTag::DateTime,
            "list" => TypeTag::List,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggOp {
    Sum,
    Avg,
    Min,
    Max,
}

impl AggOp {
    pub fn name(self) -> &'static str {
        match self {
            AggOp::Sum => "SUM",
            AggOp::Avg => "AVG",
            AggOp::Min => "MIN",
            AggOp::Max => "MAX",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArgOp {
    Min,
    Max,
}

impl ArgOp {
    pub fn name(self) -> &'static str {
        match self {
            ArgOp::Min => "ARGMIN",
            ArgOp::Max => "ARGMAX",
        }
    }
}

/// Builtin functions usable in MAP and APPLY.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FnName {
    Len,
    Weekday,
    Month,
    Year,
    Hour,
    Day,
    DurationMinutes,
    DateDiffDays,
}

impl FnName {
    pub const ALL: [FnName; 8] = [
        FnName::Len,
        FnName::Weekday,
        FnName::Month,
        FnName::Year,
        FnName::Hour,
        FnName::Day,
        FnName::DurationMinutes,
        FnName::DateDiffDays,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FnName::Len => "len",
            FnName::Weekday => "weekday",
            FnName::Month => "month",
            FnName::Year => "year",
            FnName::Hour => "hour",
            FnName::Day => "day",
            FnName::DurationMinutes => "duration_minutes",
            FnName::DateDiffDays => "date_diff_days",
        }
    }

    pub fn lookup(name: &str) -> Option<FnName> {
        FnName::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Maximum number of key bindings the function takes.
    pub fn max_keys(self) -> usize {
        match self {
            FnName::Len => 0,
            FnName::DurationMinutes | FnName::DateDiffDays => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FnExpr {
    pub name: FnName,
    /// Keys the function reads; empty means the function's defaults.
    pub keys: Vec<String>,
}

impl FnExpr {
    pub fn new(name: FnName) -> Self {
        FnExpr {
            name,
            keys: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    /// The single item of a FILTER predicate.
    Item,
    /// Left side of a JOIN condition.
    Left,
    /// Right side of a JOIN condition.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }

    /// The operator with its operands swapped (`a < b` ⇔ `b > a`).
    pub fn flipped(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Accessor {
    Year,
    Month,
    Day,
    Hour,
    Minute,
    /// English day name, e.g. "Monday".
    Weekday,
    Date,
    Time,
}

impl Accessor {
    pub const ALL: [Accessor; 8] = [
        Accessor::Year,
        Accessor::Month,
        Accessor::Day,
        Accessor::Hour,
        Accessor::Minute,
        Accessor::Weekday,
        Accessor::Date,
        Accessor::Time,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Accessor::Year => "year",
            Accessor::Month => "month",
            Accessor::Day => "day",
            Accessor::Hour => "hour",
            Accessor::Minute => "minute",
            Accessor::Weekday => "weekday",
            Accessor::Date => "date",
            Accessor::Time => "time",
        }
    }

    pub fn lookup(name: &str) -> Option<Accessor> {
        Accessor::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Rendered as a method call (`.date()`) rather than a property.
    pub fn is_method(self) -> bool {
        matches!(self, Accessor::Date | Accessor::Time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PeriodUnit {
    Years,
    Months,
    Weeks,
    Days,
    Hours,
    Minutes,
    Seconds,
}

impl PeriodUnit {
    pub const ALL: [PeriodUnit; 7] = [
        PeriodUnit::Years,
        PeriodUnit::Months,
        PeriodUnit::Weeks,
        PeriodUnit::Days,
        PeriodUnit::Hours,
        PeriodUnit::Minutes,
        PeriodUnit::Seconds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PeriodUnit::Years => "years",
            PeriodUnit::Months => "months",
            PeriodUnit::Weeks => "weeks",
            PeriodUnit::Days => "days",
            PeriodUnit::Hours => "hours",
            PeriodUnit::Minutes => "minutes",
            PeriodUnit::Seconds => "seconds",
        }
    }

    pub fn lookup(name: &str) -> Option<PeriodUnit> {
        PeriodUnit::ALL.into_iter().find(|u| u.name() == name)
    }
}

/// Predicate mini-language used by FILTER and JOIN.
#[derive(Debug, Clone, PartialEq)]
pub enum PredExpr {
    Attr {
        scope: Scope,
        key: String,
    },
    Lit(Value),
    Compare {
        op: CmpOp,
        lhs: Box<PredExpr>,
        rhs: Box<PredExpr>,
    },
    And(Box<PredExpr>, Box<PredExpr>),
    Or(Box<PredExpr>, Box<PredExpr>),
    Not(Box<PredExpr>),
    /// `needle in haystack`: substring test on text, membership on lists.
    In {
        needle: Box<PredExpr>,
        haystack: Box<PredExpr>,
    },
    Lower(Box<PredExpr>),
    Contains {
        haystack: Box<PredExpr>,
        needle: Box<PredExpr>,
    },
    /// True if any element of `list` contains `needle` as a substring.
    AnyContains {
        list: Box<PredExpr>,
        needle: Box<PredExpr>,
        fold_case: bool,
    },
    Len(Box<PredExpr>),
    Access {
        expr: Box<PredExpr>,
        accessor: Accessor,
    },
    Today,
    Now,
    Period(Vec<(PeriodUnit, i64)>),
    Arith {
        op: ArithOp,
        lhs: Box<PredExpr>,
        rhs: Box<PredExpr>,
    },
    /// Scalar result of a nested plan.
    SubPlan(Box<PlanNode>),
}

impl PredExpr {
    pub fn attr(key: impl Into<String>) -> Self {
        PredExpr::Attr {
            scope: Scope::Item,
            key: key.into(),
        }
    }

    pub fn cmp(op: CmpOp, lhs: PredExpr, rhs: PredExpr) -> Self {
        PredExpr::Compare {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn and(lhs: PredExpr, rhs: PredExpr) -> Self {
        PredExpr::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: PredExpr, rhs: PredExpr) -> Self {
        PredExpr::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn access(expr: PredExpr, accessor: Accessor) -> Self {
        PredExpr::Access {
            expr: Box::new(expr),
            accessor,
        }
    }

    /// Direct children in evaluation order.
    pub fn children(&self) -> Vec<&PredExpr> {
        match self {
            PredExpr::Attr { .. }
            | PredExpr::Lit(_)
            | PredExpr::Today
            | PredExpr::Now
            | PredExpr::Period(_)
            | PredExpr::SubPlan(_) => Vec::new(),
            PredExpr::Compare { lhs, rhs, .. } | PredExpr::Arith { lhs, rhs, .. } => vec![lhs, rhs],
            PredExpr::And(a, b) | PredExpr::Or(a, b) => vec![a, b],
            PredExpr::Not(e) | PredExpr::Lower(e) | PredExpr::Len(e) => vec![e],
            PredExpr::Access { expr, .. } => vec![expr],
            PredExpr::In { needle, haystack } => vec![needle, haystack],
            PredExpr::Contains { haystack, needle } => vec![haystack, needle],
            PredExpr::AnyContains { list, needle, .. } => vec![list, needle],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut PredExpr> {
        match self {
            PredExpr::Attr { .. }
            | PredExpr::Lit(_)
            | PredExpr::Today
            | PredExpr::Now
            | PredExpr::Period(_)
            | PredExpr::SubPlan(_) => Vec::new(),
            PredExpr::Compare { lhs, rhs, .. } | PredExpr::Arith { lhs, rhs, .. } => vec![lhs, rhs],
            PredExpr::And(a, b) | PredExpr::Or(a, b) => vec![a, b],
            PredExpr::Not(e) | PredExpr::Lower(e) | PredExpr::Len(e) => vec![e],
            PredExpr::Access { expr, .. } => vec![expr],
            PredExpr::In { needle, haystack } => vec![needle, haystack],
            PredExpr::Contains { haystack, needle } => vec![haystack, needle],
            PredExpr::AnyContains { list, needle, .. } => vec![list, needle],
        }
    }

    /// Nested plans, left to right.
    pub fn subplans(&self) -> Vec<&PlanNode> {
        let mut out = Vec::new();
        self.collect_subplans(&mut out);
        out
    }

    fn collect_subplans<'a>(&'a self, out: &mut Vec<&'a PlanNode>) {
        if let PredExpr::SubPlan(p) = self {
            out.push(p);
        }
        for c in self.children() {
            c.collect_subplans(out);
        }
    }

    pub fn subplans_mut(&mut self) -> Vec<&mut PlanNode> {
        let mut out = Vec::new();
        self.collect_subplans_mut(&mut out);
        out
    }

    fn collect_subplans_mut<'a>(&'a mut self, out: &mut Vec<&'a mut PlanNode>) {
        if let PredExpr::SubPlan(p) = self {
            out.push(p);
            return;
        }
        for c in self.children_mut() {
            c.collect_subplans_mut(out);
        }
    }

    /// Attribute keys read, with their scope, excluding nested plans.
    pub fn attr_keys(&self) -> Vec<(Scope, &str)> {
        let mut out = Vec::new();
        self.collect_keys(&mut out);
        out
    }

    fn collect_keys<'a>(&'a self, out: &mut Vec<(Scope, &'a str)>) {
        if let PredExpr::Attr { scope, key } = self {
            out.push((*scope, key));
        }
        for c in self.children() {
            c.collect_keys(out);
        }
    }
}

/// A node of an operator tree.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanNode {
    Retrieve {
        query: String,
        input: Option<Box<PlanNode>>,
    },
    Extract {
        input: Box<PlanNode>,
        keys: Vec<String>,
        types: Vec<TypeTag>,
    },
    Join {
        left: Box<PlanNode>,
        right: Box<PlanNode>,
        condition: PredExpr,
    },
    GroupBy {
        input: Box<PlanNode>,
        keys: Vec<String>,
    },
    Filter {
        input: Box<PlanNode>,
        predicate: PredExpr,
    },
    Map {
        input: Box<PlanNode>,
        func: FnExpr,
        res_name: String,
    },
    Apply {
        input: Box<PlanNode>,
        func: FnExpr,
    },
    Unnest {
        input: Box<PlanNode>,
        nested_key: String,
        unnested_key: String,
    },
    Arg {
        op: ArgOp,
        input: Box<PlanNode>,
        arg_key: String,
        val_key: Option<String>,
    },
    Aggregate {
        op: AggOp,
        input: Box<PlanNode>,
        key: String,
    },
    QudCall {
        question: String,
    },
}

pub const DEFAULT_MAP_RESULT: &str = "map_result";

impl PlanNode {
    pub fn retrieve(query: impl Into<String>) -> Self {
        PlanNode::Retrieve {
            query: query.into(),
            input: None,
        }
    }

    pub fn qud(question: impl Into<String>) -> Self {
        PlanNode::QudCall {
            question: question.into(),
        }
    }

    pub fn operator_name(&self) -> &'static str {
        match self {
            PlanNode::Retrieve { .. } => "RETRIEVE",
            PlanNode::Extract { .. } => "EXTRACT",
            PlanNode::Join { .. } => "JOIN",
            PlanNode::GroupBy { .. } => "GROUP_BY",
            PlanNode::Filter { .. } => "FILTER",
            PlanNode::Map { .. } => "MAP",
            PlanNode::Apply { .. } => "APPLY",
            PlanNode::Unnest { .. } => "UNNEST",
            PlanNode::Arg { op, .. } => op.name(),
            PlanNode::Aggregate { op, .. } => op.name(),
            PlanNode::QudCall { .. } => "QUD",
        }
    }

    /// Operand plans (`l`, or `l1` then `l2`), excluding plans nested in predicates.
    pub fn inputs(&self) -> Vec<&PlanNode> {
        match self {
            PlanNode::Retrieve { input, .. } => input.iter().map(|b| &**b).collect(),
            PlanNode::Join { left, right, .. } => vec![left, right],
            PlanNode::Extract { input, .. }
            | PlanNode::GroupBy { input, .. }
            | PlanNode::Filter { input, .. }
            | PlanNode::Map { input, .. }
            | PlanNode::Apply { input, .. }
            | PlanNode::Unnest { input, .. }
            | PlanNode::Arg { input, .. }
            | PlanNode::Aggregate { input, .. } => vec![input],
            PlanNode::QudCall { .. } => Vec::new(),
        }
    }

    pub fn predicate(&self) -> Option<&PredExpr> {
        match self {
            PlanNode::Join { condition, .. } => Some(condition),
            PlanNode::Filter { predicate, .. } => Some(predicate),
            _ => None,
        }
    }

    /// Operand plans followed by plans nested in the predicate. This order
    /// defines node paths, pre-order numbering and expansion order.
    pub fn children(&self) -> Vec<&PlanNode> {
        let mut out = self.inputs();
        if let Some(p) = self.predicate() {
            out.extend(p.subplans());
        }
        out
    }

    pub fn children_mut(&mut self) -> Vec<&mut PlanNode> {
        match self {
            PlanNode::Retrieve { input, .. } => input.iter_mut().map(|b| &mut **b).collect(),
            PlanNode::Join {
                left,
                right,
                condition,
            } => {
                let mut out: Vec<&mut PlanNode> = vec![left, right];
                out.extend(condition.subplans_mut());
                out
            }
            PlanNode::Filter { input, predicate } => {
                let mut out: Vec<&mut PlanNode> = vec![input];
                out.extend(predicate.subplans_mut());
                out
            }
            PlanNode::Extract { input, .. }
            | PlanNode::GroupBy { input, .. }
            | PlanNode::Map { input, .. }
            | PlanNode::Apply { input, .. }
            | PlanNode::Unnest { input, .. }
            | PlanNode::Arg { input, .. }
            | PlanNode::Aggregate { input, .. } => vec![input],
            PlanNode::QudCall { .. } => Vec::new(),
        }
    }

    /// Number of nodes, counting nested plans.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn has_qud(&self) -> bool {
        matches!(self, PlanNode::QudCall { .. }) || self.children().iter().any(|c| c.has_qud())
    }

    /// Pre-order traversal with node paths.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&NodePath, &'a PlanNode)) {
        fn go<'a>(
            node: &'a PlanNode,
            path: &mut NodePath,
            f: &mut impl FnMut(&NodePath, &'a PlanNode),
        ) {
            f(path, node);
            for (i, c) in node.children().into_iter().enumerate() {
                path.push(i);
                go(c, path, f);
                path.pop();
            }
        }
        go(self, &mut Vec::new(), f)
    }

    pub fn at_path(&self, path: &[usize]) -> Option<&PlanNode> {
        let mut node = self;
        for &i in path {
            node = node.children().into_iter().nth(i)?;
        }
        Some(node)
    }

    pub fn at_path_mut(&mut self, path: &[usize]) -> Option<&mut PlanNode> {
        let mut node = self;
        for &i in path {
            node = node.children_mut().into_iter().nth(i)?;
        }
        Some(node)
    }
}

/// Child indices from the root, following [`PlanNode::children`].
pub type NodePath = Vec<usize>;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

pub type SpanMap = std::collections::HashMap<NodePath, Pos>;
