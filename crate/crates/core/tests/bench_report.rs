mod common;

use common::*;
use reqap_core::persona::{ClassifierChoice, Dataset, GeneratorConfig};

#[test]
fn report_has_per_operator_timings_and_serializes() {
    let ds = Dataset::generate(&GeneratorConfig {
        seed: 91,
        personas: 1,
        rate_scale: 0.1,
        questions_per_persona: 15,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let report = bench(&ds, ClassifierChoice::Lexical);
    assert_eq!(report.outcomes.len(), 15);
    assert!(report.operators.contains_key("RETRIEVE"));
    assert!(report
        .operators
        .keys()
        .all(|k| OPERATORS.contains(&k.as_str())));
    for t in report.operators.values() {
        assert!(t.calls > 0 && t.mean_ms >= 0.0 && t.median_ms >= 0.0);
    }
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert!(json["operators"]["RETRIEVE"]["median_ms"].is_number());
    assert!(report
        .outcomes
        .iter()
        .all(|o| o.error.is_some() || !o.trace.is_empty()));
    let table = report.to_table();
    assert!(
        table.contains("RETRIEVE") && table.contains("Hit@1"),
        "{table}"
    );
}
