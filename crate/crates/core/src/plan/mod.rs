//! Operator-tree language: AST, parser, printer and validator.

pub mod ast;
mod lexer;
mod parser;
mod render;
mod validate;

pub use ast::*;
pub use parser::{
    parse_filter_predicate, parse_join_condition, parse_plan, parse_plan_with_spans, MAX_NESTING,
};
pub use render::{quote, render_plan, render_predicate};
pub use validate::{
    infer_shape, validate_plan, validate_plan_with_spans, DiagCode, Diagnostic, Level, Shape,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("arity error at {line}:{col}: {operator}: {message}")]
    Arity {
        line: usize,
        col: usize,
        operator: String,
        message: String,
    },
    #[error("unknown function `{name}` at {line}:{col}")]
    UnknownFunction {
        line: usize,
        col: usize,
        name: String,
    },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::Arity { line, col, .. }
            | ParseError::UnknownFunction { line, col, .. } => Pos {
                line: *line,
                col: *col,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_over_qud() {
        let p = parse_plan(r#"SUM(l=QUD("my online purchases in March 2022 with amounts"), attr_name="amount_spent")"#)
            .unwrap();
        assert_eq!(
            p,
            PlanNode::Aggregate {
                op: AggOp::Sum,
                input: Box::new(PlanNode::qud(
                    "my online purchases in March 2022 with amounts"
                )),
                key: "amount_spent".into(),
            }
        );
    }

    #[test]
    fn bare_retrieve() {
        assert_eq!(
            parse_plan(r#"RETRIEVE(query="I went running")"#).unwrap(),
            PlanNode::retrieve("I went running")
        );
        assert_eq!(
            render_plan(&PlanNode::retrieve("x")),
            r#"RETRIEVE(query="x")"#
        );
    }

    #[test]
    fn arity_and_unknown_errors() {
        assert!(matches!(parse_plan("SUM()"), Err(ParseError::Arity { .. })));
        assert!(matches!(
            parse_plan(r#"FOO(l=QUD("x"))"#),
            Err(ParseError::UnknownFunction { .. })
        ));
        assert!(matches!(
            parse_plan(r#"SUM(QUD("x"), attr_name="a")"#),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_plan(r#"SUM(l=QUD("x"), attr_name="a", attr_name="b")"#),
            Err(ParseError::Arity { .. })
        ));
        assert!(matches!(
            parse_plan(r#"MAP(l=QUD("x"), fct=mystery)"#),
            Err(ParseError::UnknownFunction { .. })
        ));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_plan("SUM(l=QUD(\"x\"),\n  attr_name=)").unwrap_err();
        assert_eq!(err.pos(), Pos { line: 2, col: 13 });
    }

    #[test]
    fn predicate_precedence_round_trips() {
        for src in [
            r#"attr["a"] == 1 or attr["b"] == 2 and not attr["c"] < 3"#,
            r#"(attr["a"] == 1 or attr["b"] == 2) and attr["c"] - (1 - 2) > -4.5"#,
            r#"attr["d"] >= date.today() - relativedelta(years=3)"#,
            r#"any("robert" in p.lower() for p in attr["participants"])"#,
            r#""park" in attr["location"].lower()"#,
            r#"attr["start_datetime"].date() == date(2024, 1, 5) and attr["x"] not in ["a", "b"]"#,
        ] {
            let e = parse_filter_predicate(src).unwrap();
            let again = parse_filter_predicate(&render_predicate(&e)).unwrap();
            assert_eq!(e, again, "{src}");
        }
    }

    #[test]
    fn extract_arity_is_a_diagnostic() {
        let p = parse_plan(
            r#"EXTRACT(l=RETRIEVE(query="x"), attr_names=["a", "b"], attr_types=[str])"#,
        )
        .unwrap();
        let d = validate_plan(&p);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::ExtractArity);
    }

    #[test]
    fn unproduced_key_is_reported_with_position() {
        let text =
            "SUM(\n  l=RETRIEVE(query=\"my online purchases\"),\n  attr_name=\"amount_spent\")";
        let (p, spans) = parse_plan_with_spans(text).unwrap();
        let d = validate_plan_with_spans(&p, &spans);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::UnproducedKey);
        assert!(d[0].to_string().starts_with("ERROR UnproducedKey 1:1 "));
    }

    #[test]
    fn deep_nesting_is_a_syntax_error() {
        let mut s = String::new();
        for _ in 0..1000 {
            s.push_str("APPLY(l=");
        }
        s.push_str("RETRIEVE(query=\"x\")");
        for _ in 0..1000 {
            s.push_str(", fct=len)");
        }
        assert!(matches!(parse_plan(&s), Err(ParseError::Syntax { .. })));
        let deep_pred = format!("{}1{}", "(".repeat(5000), ")".repeat(5000));
        assert!(parse_filter_predicate(&deep_pred).is_err());
    }
}
