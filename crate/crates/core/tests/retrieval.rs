mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::*;
use reqap_core::persona::{all_queries, Dataset};
use reqap_core::retrieve::{Pipeline, PipelineBackend, RetrievalConfig, RetrieveBackend};
use reqap_core::EventId;

#[test]
fn oracle_retrieval_is_exact_on_a_generated_persona() {
    let ds = Dataset::generate(&retrieval_config(41, 1)).unwrap();
    let s = score_retrieval(&ds);
    assert!(s.queries > 20);
    assert_eq!(s.oracle_perfect, s.queries, "{:?}", s.oracle_failures);
    assert!((0.0..=1.0).contains(&s.lexical_recall));
}

#[test]
fn provenance_only_names_store_events() {
    let ds = Dataset::generate(&retrieval_config(42, 1)).unwrap();
    let p = &ds.personas[0];
    let store = Arc::new(p.store().unwrap());
    let known: BTreeSet<EventId> = store.events().iter().map(|e| e.id().clone()).collect();
    let backend = PipelineBackend::new(store, Pipeline::lexical(RetrievalConfig::default()));
    for q in all_queries(&p.canonical).iter().take(40) {
        for e in backend.retrieve(q, None).unwrap() {
            assert!(e.origin().is_subset(&known), "{q}: {:?}", e.origin());
            assert!(!e.origin().is_empty());
        }
    }
}

#[test]
fn retrieval_restricted_to_input_stays_inside_it() {
    let backend = oracle_backend(q3_store(), &q3_gold());
    let input: Vec<_> = q3_store()
        .into_iter()
        .filter(|e| e.id().as_str() <= "e03")
        .collect();
    let out = backend.retrieve("I played football", Some(&input)).unwrap();
    for e in &out {
        assert!(e.origin().iter().all(|o| o.as_str() <= "e03"));
    }
    assert!(!out.is_empty());
}
