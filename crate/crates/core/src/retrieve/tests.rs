use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::NaiveDateTime;

use super::*;
use crate::event::{EventId, Source, TimeSpan};
use crate::value::Value;

fn dt(s: &str) -> NaiveDateTime {
    NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M").unwrap()
}

fn ev(id: &str, source: Source, start: &str, end: &str, attrs: &[(&str, &str)]) -> Event {
    Event::new(
        EventId::new(id),
        source,
        TimeSpan::new(dt(start), dt(end)).unwrap(),
        attrs.iter().map(|(k, v)| (k.to_string(), Value::text(*v))),
    )
    .unwrap()
}

fn candidates_for(query: &str, events: &[Event]) -> Vec<String> {
    let refs: Vec<&Event> = events.iter().collect();
    let pool = Pool::build(&events.iter().map(verbalize_event).collect::<Vec<_>>());
    sparse_candidates(query, &refs, &pool, &Bm25::default(), 0.1)
        .unwrap()
        .into_iter()
        .map(|(i, _)| events[i].id().to_string())
        .collect()
}

fn small_store() -> Vec<Event> {
    vec![
        ev(
            "w1",
            Source::Workout,
            "2023-10-11 18:00",
            "2023-10-11 19:30",
            &[("workout_type", "football")],
        ),
        ev(
            "m1",
            Source::Mail,
            "2023-10-12 09:00",
            "2023-10-12 09:00",
            &[("subject", "Pizza oven arrived")],
        ),
        ev(
            "s1",
            Source::SocialMedia,
            "2023-10-12 20:00",
            "2023-10-12 20:00",
            &[("text", "Great football match tonight")],
        ),
        ev(
            "p1",
            Source::MusicStream,
            "2023-10-13 08:00",
            "2023-10-13 08:04",
            &[("song", "Morning"), ("artist", "Grieg")],
        ),
        ev(
            "n1",
            Source::Note,
            "2023-10-13 12:00",
            "2023-10-13 12:00",
            &[("text", "buy milk")],
        ),
    ]
}

#[test]
fn football_hits_exactly_its_two_events() {
    let mut got = candidates_for("football", &small_store());
    got.sort();
    assert_eq!(got, ["s1", "w1"]);
}

#[test]
fn absent_token_gives_nothing() {
    assert!(candidates_for("volleyball", &small_store()).is_empty());
    let refs: Vec<&Event> = Vec::new();
    assert!(matches!(
        sparse_candidates("  ", &refs, &Pool::default(), &Bm25::default(), 0.1),
        Err(RetrieveError::EmptyQuery)
    ));
}

/// Direct BM25 over raw token counts, no inverted index.
fn brute_force_bm25(query: &str, docs: &[String]) -> Vec<f64> {
    let toks: Vec<Vec<String>> = docs.iter().map(|d| text::tokenize(d)).collect();
    let n = docs.len() as f64;
    let avg = toks.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let terms: BTreeSet<String> = text::tokenize(query).into_iter().collect();
    toks.iter()
        .map(|doc| {
            terms
                .iter()
                .map(|t| {
                    let tf = doc.iter().filter(|x| *x == t).count() as f64;
                    if tf == 0.0 {
                        return 0.0;
                    }
                    let df = toks.iter().filter(|d| d.contains(t)).count() as f64;
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    idf * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * doc.len() as f64 / avg))
                })
                .sum()
        })
        .collect()
}

#[test]
fn sparse_scoring_matches_brute_force() {
    let words = [
        "running", "ran", "swim", "pizza", "concert", "gym", "run", "trail", "coffee", "meeting",
    ];
    let sources = [
        Source::Workout,
        Source::Note,
        Source::SocialMedia,
        Source::Mail,
    ];
    let events: Vec<Event> = (0..100)
        .map(|i| {
            let text = format!(
                "{} {} {}",
                words[i % 10],
                words[(i * 7 + 3) % 10],
                words[(i * 3 + 1) % 10]
            );
            ev(
                &format!("e{i:03}"),
                sources[i % 4],
                "2023-01-01 10:00",
                "2023-01-01 11:00",
                &[("text", &text)],
            )
        })
        .collect();
    let docs: Vec<String> = events.iter().map(verbalize_event).collect();
    let raw = brute_force_bm25("running", &docs);
    let max = raw.iter().copied().fold(0.0, f64::max);
    let mut expected: Vec<(String, f64)> = raw
        .iter()
        .enumerate()
        .filter(|(_, s)| *s / max > 0.1)
        .map(|(i, s)| (events[i].id().to_string(), s / max))
        .collect();
    expected.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let refs: Vec<&Event> = events.iter().collect();
    let got =
        sparse_candidates("running", &refs, &Pool::build(&docs), &Bm25::default(), 0.1).unwrap();
    assert_eq!(got.len(), expected.len());
    for ((i, s), (id, e)) in got.iter().zip(&expected) {
        assert_eq!(events[*i].id().as_str(), id);
        assert!((s - e).abs() < 1e-9);
    }
}

#[test]
fn lower_threshold_never_shrinks_pool() {
    let events = small_store();
    let refs: Vec<&Event> = events.iter().collect();
    let pool = Pool::build(&events.iter().map(verbalize_event).collect::<Vec<_>>());
    let at = |t| {
        sparse_candidates("football pizza match", &refs, &pool, &Bm25::default(), t)
            .unwrap()
            .into_iter()
            .map(|(i, _)| i)
            .collect::<BTreeSet<_>>()
    };
    assert!(at(0.9).is_subset(&at(0.5)));
    assert!(at(0.5).is_subset(&at(0.01)));
}

fn workouts(n_soccer: usize, n_other: usize) -> Vec<Event> {
    (0..n_soccer + n_other)
        .map(|i| {
            let kind = if i < n_soccer { "soccer" } else { "gym" };
            let minute = format!("2023-01-{:02} 10:00", i + 1);
            ev(
                &format!("w{i}"),
                Source::Workout,
                &minute,
                &minute,
                &[("workout_type", kind)],
            )
        })
        .collect()
}

#[test]
fn frequent_pairs_are_mined() {
    let events = workouts(7, 3);
    let refs: Vec<&Event> = events.iter().collect();
    let pats = mine_patterns(&refs, 0.5);
    let soccer = pats
        .iter()
        .find(|p| {
            p.kind
                == PatternKind::KeyValue {
                    key: "workout_type".into(),
                    value: Value::text("soccer"),
                }
        })
        .unwrap();
    assert_eq!(soccer.support, 7);
    assert!(!pats.iter().any(|p| p.to_string() == "workout_type: gym"));
    // whole source first: support 10
    assert_eq!(pats[0].kind, PatternKind::WholeSource(Source::Workout));
}

#[test]
fn one_whole_source_pattern_per_source() {
    let mut events = workouts(2, 0);
    events.push(ev(
        "m",
        Source::Mail,
        "2023-01-01 10:00",
        "2023-01-01 10:00",
        &[("subject", "soccer")],
    ));
    let refs: Vec<&Event> = events.iter().collect();
    let pats = mine_patterns(&refs, 1.0);
    assert_eq!(pats.len(), 2);
    assert!(pats
        .iter()
        .all(|p| matches!(p.kind, PatternKind::WholeSource(_))));
}

#[test]
fn labels_prune_and_keep() {
    let events = [
        ev(
            "p1",
            Source::MusicStream,
            "2023-01-01 10:00",
            "2023-01-01 10:03",
            &[("song", "Pizza Song")],
        ),
        ev(
            "p2",
            Source::MusicStream,
            "2023-01-01 10:03",
            "2023-01-01 10:06",
            &[("song", "Pasta")],
        ),
        ev(
            "r1",
            Source::OnlinePurchase,
            "2023-01-01 12:00",
            "2023-01-01 12:00",
            &[("product", "pizza")],
        ),
    ];
    let refs: Vec<&Event> = events.iter().collect();
    let pats = mine_patterns(&refs, 1.0);
    let labels: Vec<Option<Label>> = pats
        .iter()
        .map(|p| match &p.kind {
            PatternKind::WholeSource(Source::MusicStream) => Some(Label::Irrelevant),
            _ => Some(Label::Partial),
        })
        .collect();
    let out = apply_pattern_labels(3, &pats, &labels).unwrap();
    assert_eq!(out.dropped, 2);
    assert_eq!(out.undecided, [2]);

    let all = vec![Some(Label::Relevant); pats.len()];
    let out = apply_pattern_labels(3, &pats, &all).unwrap();
    assert_eq!((out.kept.len(), out.dropped), (3, 0));

    let mut missing = all.clone();
    missing[0] = None;
    assert!(matches!(
        apply_pattern_labels(3, &pats, &missing),
        Err(RetrieveError::UnlabeledPattern(_))
    ));
}

#[test]
fn gym_pattern_drops_gym_workouts() {
    let events = workouts(3, 3);
    let refs: Vec<&Event> = events.iter().collect();
    let pats = mine_patterns(&refs, 0.05);
    let labels: Vec<Option<Label>> = pats
        .iter()
        .map(|p| {
            Some(if p.to_string() == "workout_type: gym" {
                Label::Irrelevant
            } else {
                Label::Partial
            })
        })
        .collect();
    let out = apply_pattern_labels(6, &pats, &labels).unwrap();
    assert_eq!(out.dropped, 3);
    assert_eq!(out.undecided, [0, 1, 2]);
}

#[test]
fn relevant_wins_over_irrelevant() {
    let events = workouts(2, 0);
    let refs: Vec<&Event> = events.iter().collect();
    let pats = mine_patterns(&refs, 0.5);
    let mut labels = vec![Some(Label::Irrelevant); pats.len()];
    labels[pats.len() - 1] = Some(Label::Relevant);
    let out = apply_pattern_labels(2, &pats, &labels).unwrap();
    assert_eq!((out.kept.len(), out.dropped), (2, 0));
}

#[test]
fn lexical_event_classifier() {
    let lex = LexicalClassifier::default();
    let q = "when did I play football with Robert?";
    let cases = [
        (
            ev(
                "a",
                Source::Workout,
                "2023-01-01 10:00",
                "2023-01-01 11:00",
                &[("workout_type", "Football")],
            ),
            true,
        ),
        (
            ev(
                "b",
                Source::Mail,
                "2023-01-01 10:00",
                "2023-01-01 10:00",
                &[("sender", "robert@example.org")],
            ),
            true,
        ),
        (
            ev(
                "c",
                Source::Note,
                "2023-01-01 10:00",
                "2023-01-01 10:00",
                &[("text", "when the rain stops")],
            ),
            false,
        ),
        (
            ev(
                "d",
                Source::SocialMedia,
                "2023-01-01 10:00",
                "2023-01-01 10:00",
                &[("text", "played footballs")],
            ),
            true,
        ),
        (
            ev(
                "e",
                Source::MusicStream,
                "2023-01-01 10:00",
                "2023-01-01 10:03",
                &[("song", "Yellow")],
            ),
            false,
        ),
    ];
    for (e, keep) in &cases {
        assert_eq!(lex.classify_event(q, e).unwrap(), *keep, "{}", e.id());
    }
    assert!(classify_remaining(q, Vec::new(), &lex).unwrap().is_empty());
}

#[test]
fn oracle_keeps_gold_exactly() {
    let events = small_store();
    let mut oracle = OracleClassifier::new();
    oracle.insert("football?", [EventId::new("w1"), EventId::new("s1")]);
    let kept = classify_remaining("Football? ", events.clone(), &oracle).unwrap();
    let ids: Vec<&str> = kept.iter().map(|e| e.id().as_str()).collect();
    assert_eq!(ids, ["w1", "s1"]);
    assert!(matches!(
        oracle.classify_event("other", &events[0]),
        Err(RetrieveError::NoGold(_))
    ));
}

#[test]
fn overlapping_cross_source_events_merge() {
    let cal = ev(
        "c",
        Source::Calendar,
        "2023-10-11 10:00",
        "2023-10-11 11:00",
        &[("summary", "football")],
    );
    let soc = ev(
        "s",
        Source::SocialMedia,
        "2023-10-11 10:30",
        "2023-10-11 11:30",
        &[("text", "football"), ("summary", "fun")],
    );
    let out = deduplicate(vec![soc, cal]);
    assert_eq!(out.len(), 1);
    let m = &out[0];
    assert_eq!(m.span().start(), dt("2023-10-11 10:00"));
    assert_eq!(m.span().end(), dt("2023-10-11 11:30"));
    assert_eq!(m.id().as_str(), "c+s");
    assert_eq!(m.attrs()["text"], Value::text("football"));
    // equal lengths: the structured calendar entry wins
    assert_eq!(m.attrs()["summary"], Value::text("football"));
    assert_eq!(m.attrs()["summary__social_media"], Value::text("fun"));
    assert_eq!(m.origin().len(), 2);
}

#[test]
fn disjoint_and_same_source_events_stay() {
    let a = ev(
        "a",
        Source::Calendar,
        "2023-10-11 10:00",
        "2023-10-11 11:00",
        &[],
    );
    let b = ev(
        "b",
        Source::Mail,
        "2023-10-11 12:00",
        "2023-10-11 12:00",
        &[],
    );
    let c = ev(
        "c",
        Source::Calendar,
        "2023-10-11 10:30",
        "2023-10-11 11:30",
        &[],
    );
    let out = deduplicate(vec![a.clone(), b.clone(), c.clone()]);
    assert_eq!(out, vec![a, c, b]);
}

#[test]
fn chained_overlaps_collapse() {
    let a = ev(
        "a",
        Source::Calendar,
        "2023-10-11 10:00",
        "2023-10-11 11:00",
        &[],
    );
    let b = ev(
        "b",
        Source::SocialMedia,
        "2023-10-11 10:45",
        "2023-10-11 12:00",
        &[],
    );
    let c = ev(
        "c",
        Source::Workout,
        "2023-10-11 11:30",
        "2023-10-11 13:00",
        &[],
    );
    let out = deduplicate(vec![c, a, b]);
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].span().start(), dt("2023-10-11 10:00"));
    assert_eq!(out[0].span().end(), dt("2023-10-11 13:00"));
    assert_eq!(deduplicate(out.clone()), out);
}

fn backend(events: Vec<Event>, gold: &[(&str, &[&str])]) -> PipelineBackend {
    let store = Arc::new(EventStore::from_vec(events).unwrap());
    let mut oracle = OracleClassifier::new();
    for (q, ids) in gold {
        oracle.insert(q, ids.iter().map(|i| EventId::new(*i)));
    }
    PipelineBackend::new(
        store,
        Pipeline::with_classifiers(RetrievalConfig::default(), Arc::new(oracle)),
    )
}

#[test]
fn football_retrieval_merges_overlaps() {
    let mut events = small_store();
    events.push(ev(
        "c1",
        Source::Calendar,
        "2023-10-11 18:00",
        "2023-10-11 19:30",
        &[("summary", "Football training")],
    ));
    events.push(ev(
        "g1",
        Source::Workout,
        "2023-10-14 18:00",
        "2023-10-14 19:00",
        &[("workout_type", "gym")],
    ));
    let b = backend(events, &[("I played football", &["w1", "c1", "s1"])]);
    let out = b.retrieve("I played football", None).unwrap();
    let ids: Vec<&str> = out.iter().map(|e| e.id().as_str()).collect();
    assert_eq!(ids, ["c1+w1", "s1"]);
    assert!(b
        .retrieve("I played football", Some(&[]))
        .unwrap()
        .is_empty());
}

#[test]
fn oracle_pipeline_has_full_recall_and_precision() {
    // 30 workouts; the soccer ones are gold
    let events = workouts(12, 18);
    let gold: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let gold_refs: Vec<&str> = gold.iter().map(String::as_str).collect();
    let mut b = backend(events, &[("soccer workouts", &gold_refs)]);
    b.pipeline.cfg.dedup = false;
    let (out, stats) = b.retrieve_with_stats("soccer workouts", None).unwrap();
    let got: BTreeSet<&str> = out.iter().map(|e| e.id().as_str()).collect();
    assert_eq!(got, gold_refs.iter().copied().collect());
    assert_eq!(stats.output, 12);
}

#[test]
fn oracle_file_round_trips() {
    let mut oracle = OracleClassifier::new();
    oracle.insert("I played Football", [EventId::new("b"), EventId::new("a")]);
    oracle.insert("I ate food", [EventId::new("c")]);
    let text = oracle.to_tsv();
    assert_eq!(text, "i ate food\tc\ni played football\ta,b\n");
    assert_eq!(OracleClassifier::parse(&text).unwrap().to_tsv(), text);
    assert!(matches!(
        OracleClassifier::parse("no tab here"),
        Err(RetrieveError::BadOracle { line: 1 })
    ));
}
