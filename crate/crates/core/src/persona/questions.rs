//! Question templates, slot filling and oracle gold answers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::canonical::{CanonicalEvent, EventKind, Period};
use super::gold::{CanonicalBackend, Selector};
use super::pools::{DESTINATIONS, MEETING_ACTIVITIES};
use super::profile::Persona;
use super::PersonaError;
use crate::exec::{execute, ExecContext, ExecError, Output};
use crate::plan::{parse_plan, render_plan, PlanNode};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "ordering")]
    Ordering,
    #[serde(rename = "grouping")]
    Grouping,
    #[serde(rename = "temporal")]
    Temporal,
    #[serde(rename = "aggregation")]
    Aggregation,
    #[serde(rename = "join")]
    Join,
    #[serde(rename = "multi-source")]
    MultiSource,
}

impl Tag {
    pub const ALL: [Tag; 6] = [
        Tag::Ordering,
        Tag::Grouping,
        Tag::Temporal,
        Tag::Aggregation,
        Tag::Join,
        Tag::MultiSource,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tag::Ordering => "ordering",
            Tag::Grouping => "grouping",
            Tag::Temporal => "temporal",
            Tag::Aggregation => "aggregation",
            Tag::Join => "join",
            Tag::MultiSource => "multi-source",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Tag {
    type Err = PersonaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| PersonaError::BadRecord(format!("unknown tag `{s}`")))
    }
}

/// A question pattern with `{slot}` placeholders in both the text and
/// the plan. `multi-source` is derived from the plan, not listed here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template {
    pub id: &'static str,
    pub text: &'static str,
    pub plan: &'static str,
    pub tags: &'static [Tag],
}

use Tag::*;

macro_rules! template {
    ($id:literal, $text:literal, [$($tag:ident),*], $plan:expr) => {
        Template { id: $id, text: $text, plan: $plan, tags: &[$($tag),*] }
    };
}

/// The bundled templates.
pub const TEMPLATES: &[Template] = &[
    template!(
        "songs_in_year",
        "How many songs did I listen to in {year}?",
        [Temporal, Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my music streams"), attr_names=["start_date"], attr_types=[date]), filter=lambda attr: attr["start_date"].year == {year}), fct=len)"#
    ),
    template!(
        "music_top_day",
        "On which day did I listen to music the most?",
        [Grouping, Ordering],
        r#"ARGMAX(l=MAP(l=GROUP_BY(l=EXTRACT(l=RETRIEVE(query="my music streams"), attr_names=["start_date"], attr_types=[date]), attr_names=["start_date"]), fct=len, res_name="num_songs"), arg_attr_name="num_songs", val_attr_name="start_date")"#
    ),
    template!(
        "top_artist",
        "Which artist did I listen to most?",
        [Grouping, Ordering],
        r#"ARGMAX(l=MAP(l=GROUP_BY(l=EXTRACT(l=RETRIEVE(query="my music streams"), attr_names=["artist"], attr_types=[str]), attr_names=["artist"]), fct=len, res_name="count"), arg_attr_name="count", val_attr_name="artist")"#
    ),
    template!(
        "spend_in_year",
        "How much money did I spend on online purchases in {year}?",
        [Temporal, Aggregation],
        r#"SUM(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my online purchases"), attr_names=["price"], attr_types=[float]), filter=lambda attr: attr["start_date"].year == {year}), attr_name="price")"#
    ),
    template!(
        "products_last_months",
        "How many products did I buy online in the last 6 months?",
        [Temporal, Aggregation],
        r#"SUM(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my online purchases"), attr_names=["start_date", "product_quantity"], attr_types=[date, int]), filter=lambda attr: attr["start_date"] >= date.today() - relativedelta(months=6)), attr_name="product_quantity")"#
    ),
    template!(
        "most_expensive",
        "What was the most expensive product I bought online?",
        [Ordering],
        r#"ARGMAX(l=EXTRACT(l=RETRIEVE(query="my online purchases"), attr_names=["price", "product"], attr_types=[float, str]), arg_attr_name="price", val_attr_name="product")"#
    ),
    template!(
        "workouts_of_type",
        "How many {workout} workouts did I do in {year}?",
        [Temporal, Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my workouts"), attr_names=["workout_type"], attr_types=[str]), filter=lambda attr: attr["workout_type"] == "{workout}" and attr["start_date"].year == {year}), fct=len)"#
    ),
    template!(
        "max_heart_rate",
        "What was my highest heart rate during {workout}?",
        [Aggregation],
        r#"MAX(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my workouts"), attr_names=["workout_type", "maximum_heart_rate"], attr_types=[str, int]), filter=lambda attr: attr["workout_type"] == "{workout}"), attr_name="maximum_heart_rate")"#
    ),
    template!(
        "workout_minutes",
        "How many minutes did I spend on {workout} in {year}?",
        [Temporal, Aggregation],
        r#"SUM(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my workouts"), attr_names=["workout_type", "duration"], attr_types=[str, int]), filter=lambda attr: attr["workout_type"] == "{workout}" and attr["start_date"].year == {year}), attr_name="duration")"#
    ),
    template!(
        "last_movie",
        "Which movie did I watch last?",
        [Ordering],
        r#"ARGMAX(l=EXTRACT(l=RETRIEVE(query="my movie streams"), attr_names=["movie_title"], attr_types=[str]), arg_attr_name="start_datetime", val_attr_name="movie_title")"#
    ),
    template!(
        "series_episodes",
        "How many episodes of {series} did I watch?",
        [Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my TV series streams"), attr_names=["tvseries_title"], attr_types=[str]), filter=lambda attr: attr["tvseries_title"] == "{series}"), fct=len)"#
    ),
    template!(
        "songs_while_working_out",
        "How many songs did I listen to while working out?",
        [Join, Aggregation],
        r#"APPLY(l=JOIN(l1=RETRIEVE(query="my music streams"), l2=RETRIEVE(query="my workouts"), condition="i1.start_datetime >= i2.start_datetime and i1.end_datetime <= i2.end_datetime"), fct=len)"#
    ),
    template!(
        "top_category",
        "From which category did I order most often online?",
        [Grouping, Ordering],
        r#"ARGMAX(l=MAP(l=GROUP_BY(l=EXTRACT(l=RETRIEVE(query="my online purchases"), attr_names=["category"], attr_types=[str]), attr_names=["category"]), fct=len, res_name="orders"), arg_attr_name="orders", val_attr_name="category")"#
    ),
    template!(
        "workout_weekday",
        "On which weekday did I work out most often?",
        [Grouping, Ordering, Temporal],
        r#"ARGMAX(l=MAP(l=GROUP_BY(l=MAP(l=RETRIEVE(query="my workouts"), fct=weekday, res_name="weekday"), attr_names=["weekday"]), fct=len, res_name="count"), arg_attr_name="count", val_attr_name="weekday")"#
    ),
    template!(
        "average_workout",
        "What was the average duration of my {workout} workouts?",
        [Aggregation],
        r#"AVG(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my workouts"), attr_names=["workout_type", "duration"], attr_types=[str, int]), filter=lambda attr: attr["workout_type"] == "{workout}"), attr_name="duration")"#
    ),
    template!(
        "movies_of_genre",
        "How many {movie_genre} movies did I watch in {year}?",
        [Temporal, Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my movie streams"), attr_names=["genre"], attr_types=[str]), filter=lambda attr: attr["genre"] == "{movie_genre}" and attr["start_date"].year == {year}), fct=len)"#
    ),
    template!(
        "meet_friend",
        "How many times did I meet with {friend}?",
        [Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my meetings"), attr_names=["participants"], attr_types=[list]), filter=lambda attr: any("{friend_lower}" in p.lower() for p in attr["participants"])), fct=len)"#
    ),
    template!(
        "meet_friend_at",
        "How many times did I meet with {friend} at a {place_type}?",
        [Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my meetings"), attr_names=["participants", "place_type"], attr_types=[list, str]), filter=lambda attr: any("{friend_lower}" in p.lower() for p in attr["participants"]) and attr["place_type"] == "{place_type}"), fct=len)"#
    ),
    template!(
        "last_doctor",
        "When was my last doctor's appointment?",
        [Ordering, Temporal],
        r#"MAX(l=EXTRACT(l=RETRIEVE(query="my doctor appointments"), attr_names=["start_date"], attr_types=[date]), attr_name="start_date")"#
    ),
    template!(
        "earliest_doctor",
        "Which doctor's appointment was the earliest in the day?",
        [Ordering],
        r#"ARGMIN(l=EXTRACT(l=RETRIEVE(query="my doctor appointments"), attr_names=["start_time", "doctor"], attr_types=[time, str]), arg_attr_name="start_time", val_attr_name="doctor")"#
    ),
    template!(
        "trips_to_country",
        "How many trips did I take to {country}?",
        [Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my trips"), attr_names=["country"], attr_types=[str]), filter=lambda attr: attr["country"] == "{country}"), fct=len)"#
    ),
    template!(
        "songs_on_trip",
        "How many songs did I listen to during my trips to {destination}?",
        [Join, Aggregation],
        r#"APPLY(l=JOIN(l1=RETRIEVE(query="my music streams"), l2=FILTER(l=EXTRACT(l=RETRIEVE(query="my trips"), attr_names=["destination"], attr_types=[str]), filter=lambda attr: attr["destination"] == "{destination}"), condition="i1.start_datetime >= i2.start_datetime and i1.end_datetime <= i2.end_datetime"), fct=len)"#
    ),
    template!(
        "first_workout_after_job",
        "When was my first {workout} workout after I started as {job}?",
        [Temporal, Ordering],
        r#"MIN(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my workouts"), attr_names=["workout_type"], attr_types=[str]), filter=lambda attr: attr["workout_type"] == "{workout}" and attr["start_datetime"] >= MIN(l=RETRIEVE(query="I started as {job}"), attr_name="start_datetime").result), attr_name="start_datetime")"#
    ),
    template!(
        "meet_kid",
        "How many times did I meet with my child {kid} in {year}?",
        [Temporal, Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my meetings"), attr_names=["participants"], attr_types=[list]), filter=lambda attr: any("{kid_lower}" in p.lower() for p in attr["participants"]) and attr["start_date"].year == {year}), fct=len)"#
    ),
    template!(
        "meet_parents",
        "How often did I meet with both my parents?",
        [Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my meetings"), attr_names=["participants"], attr_types=[list]), filter=lambda attr: any("{mother_lower}" in p.lower() for p in attr["participants"]) and any("{father_lower}" in p.lower() for p in attr["participants"])), fct=len)"#
    ),
    template!(
        "doctor_in_year",
        "How many doctor's appointments did I have in {year}?",
        [Temporal, Aggregation],
        r#"APPLY(l=FILTER(l=RETRIEVE(query="my doctor appointments"), filter=lambda attr: attr["start_date"].year == {year}), fct=len)"#
    ),
    template!(
        "last_activity_with",
        "Where did I last have {activity} with {friend}?",
        [Ordering],
        r#"ARGMAX(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my meetings"), attr_names=["participants", "activity", "location"], attr_types=[list, str, str]), filter=lambda attr: any("{friend_lower}" in p.lower() for p in attr["participants"]) and attr["activity"] == "{activity}"), arg_attr_name="start_datetime", val_attr_name="location")"#
    ),
    template!(
        "longest_trip",
        "Where did my longest trip go?",
        [Ordering],
        r#"ARGMAX(l=MAP(l=EXTRACT(l=RETRIEVE(query="my trips"), attr_names=["destination"], attr_types=[str]), fct=duration_minutes, res_name="minutes"), arg_attr_name="minutes", val_attr_name="destination")"#
    ),
    template!(
        "birthdays_in_year",
        "How many birthdays were in my calendar in {year}?",
        [Temporal, Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my anniversaries"), attr_names=["occasion"], attr_types=[str]), filter=lambda attr: attr["occasion"] == "birthday" and attr["start_date"].year == {year}), fct=len)"#
    ),
    template!(
        "job_start",
        "When did I start as {job}?",
        [Temporal],
        r#"MIN(l=EXTRACT(l=RETRIEVE(query="I started as {job}"), attr_names=["start_date"], attr_types=[date]), attr_name="start_date")"#
    ),
    template!(
        "songs_in_month",
        "How many songs did I listen to in {month} {year}?",
        [Temporal, Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my music streams"), attr_names=["start_date"], attr_types=[date]), filter=lambda attr: attr["start_date"].year == {year} and attr["start_date"].month == {month_num}), fct=len)"#
    ),
    template!(
        "spend_in_month",
        "How much money did I spend on online purchases in {month} {year}?",
        [Temporal, Aggregation],
        r#"SUM(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my online purchases"), attr_names=["price"], attr_types=[float]), filter=lambda attr: attr["start_date"].year == {year} and attr["start_date"].month == {month_num}), attr_name="price")"#
    ),
    template!(
        "workouts_in_month",
        "How many workouts did I do in {month} {year}?",
        [Temporal, Aggregation],
        r#"APPLY(l=FILTER(l=RETRIEVE(query="my workouts"), filter=lambda attr: attr["start_date"].year == {year} and attr["start_date"].month == {month_num}), fct=len)"#
    ),
    template!(
        "workout_minutes_in_month",
        "How many minutes did I work out in {month} {year}?",
        [Temporal, Aggregation],
        r#"SUM(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my workouts"), attr_names=["duration"], attr_types=[int]), filter=lambda attr: attr["start_date"].year == {year} and attr["start_date"].month == {month_num}), attr_name="duration")"#
    ),
    template!(
        "meet_friend_in_month",
        "How many times did I meet with {friend} in {month} {year}?",
        [Temporal, Aggregation],
        r#"APPLY(l=FILTER(l=EXTRACT(l=RETRIEVE(query="my meetings"), attr_names=["participants"], attr_types=[list]), filter=lambda attr: any("{friend_lower}" in p.lower() for p in attr["participants"]) and attr["start_date"].year == {year} and attr["start_date"].month == {month_num}), fct=len)"#
    ),
    template!(
        "movies_in_month",
        "How many movies did I watch in {month} {year}?",
        [Temporal, Aggregation],
        r#"APPLY(l=FILTER(l=RETRIEVE(query="my movie streams"), filter=lambda attr: attr["start_date"].year == {year} and attr["start_date"].month == {month_num}), fct=len)"#
    ),
];

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

pub fn template(id: &str) -> Option<&'static Template> {
    TEMPLATES.iter().find(|t| t.id == id)
}

fn placeholders(s: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut rest = s;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else {
            break;
        };
        let name = &rest[open + 1..open + close];
        if !name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
            out.insert(name.to_string());
        }
        rest = &rest[open + close + 1..];
    }
    out
}

fn substitute(s: &str, slots: &BTreeMap<String, String>) -> String {
    let mut out = s.to_string();
    for (k, v) in slots {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

impl Template {
    /// Slot names, lowercase variants folded into their base slot.
    pub fn slots(&self) -> BTreeSet<String> {
        placeholders(self.text)
            .into_iter()
            .chain(placeholders(self.plan))
            .map(|s| match s.as_str() {
                "month_num" => "month".to_string(),
                _ => s.strip_suffix("_lower").map_or(s.clone(), str::to_string),
            })
            .collect()
    }
}

/// Candidate values for a slot.
fn candidates(slot: &str, persona: &Persona, period: Period) -> Vec<String> {
    match slot {
        "year" => period.calendar_years().map(|y| y.to_string()).collect(),
        "month" => MONTHS.map(String::from).to_vec(),
        "friend" => persona.friends.clone(),
        "kid" => persona.kids.iter().map(|k| k.name.clone()).collect(),
        "mother" => vec![persona.mother.clone()],
        "father" => vec![persona.father.clone()],
        "workout" => persona.workouts.clone(),
        "series" => persona.favorite_series.clone(),
        "movie_genre" => persona.movie_genres.clone(),
        "place_type" => {
            let mut v: Vec<String> = MEETING_ACTIVITIES.iter().map(|a| a.1.to_string()).collect();
            v.dedup();
            v
        }
        "activity" => ["lunch", "dinner", "coffee", "drinks"]
            .map(String::from)
            .to_vec(),
        "destination" | "country" => {
            let mut v: Vec<String> = DESTINATIONS
                .iter()
                .filter(|d| persona.travel_regions.iter().any(|r| r == d.2))
                .map(|d| if slot == "destination" { d.0 } else { d.1 }.to_string())
                .collect();
            v.sort();
            v.dedup();
            v
        }
        "job" => persona
            .career
            .iter()
            .filter(|j| period.contains(j.start))
            .map(|j| j.title.clone())
            .collect(),
        _ => Vec::new(),
    }
}

/// Draws one value per slot from the persona's constants.
pub fn fill_slots(
    t: &Template,
    persona: &Persona,
    period: Period,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeMap<String, String>, PersonaError> {
    let mut out = BTreeMap::new();
    for slot in t.slots() {
        let options = candidates(&slot, persona, period);
        let value = options
            .choose(rng)
            .ok_or_else(|| PersonaError::NoValidFilling(t.id.to_string()))?;
        if slot == "month" {
            let num = MONTHS.iter().position(|m| m == value).expect("month name") + 1;
            out.insert("month_num".to_string(), num.to_string());
        }
        out.insert(format!("{slot}_lower"), value.to_lowercase());
        out.insert(slot, value.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionInstance {
    pub id: String,
    pub persona: String,
    pub template: String,
    pub question: String,
    /// Fully resolved plan, in rendered form.
    pub plan: String,
    pub gold: Value,
    pub tags: Vec<Tag>,
    /// Every retrieval in the plan targets a structured source.
    pub structured_only: bool,
    /// Retrieval queries the plan issues.
    pub queries: Vec<String>,
}

impl QuestionInstance {
    pub fn to_json_line(&self) -> String {
        json!({
            "id": self.id,
            "persona": self.persona,
            "template": self.template,
            "question": self.question,
            "plan": self.plan,
            "gold": self.gold.to_json(),
            "tags": self.tags.iter().map(|t| t.name()).collect::<Vec<_>>(),
            "structured_only": self.structured_only,
            "queries": self.queries,
        })
        .to_string()
    }

    pub fn from_json_line(line: &str) -> Result<Self, PersonaError> {
        let bad = |m: String| PersonaError::BadRecord(m);
        let j: serde_json::Value = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let s = |k: &str| {
            j.get(k)
                .and_then(serde_json::Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| bad(format!("missing `{k}`")))
        };
        let strings = |k: &str| -> Result<Vec<String>, PersonaError> {
            j.get(k)
                .and_then(serde_json::Value::as_array)
                .ok_or_else(|| bad(format!("missing `{k}`")))?
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| bad(format!("bad `{k}`")))
                })
                .collect()
        };
        Ok(QuestionInstance {
            id: s("id")?,
            persona: s("persona")?,
            template: s("template")?,
            question: s("question")?,
            plan: s("plan")?,
            gold: Value::from_json(j.get("gold").unwrap_or(&serde_json::Value::Null))
                .map_err(|e| bad(e.to_string()))?,
            tags: strings("tags")?
                .iter()
                .map(|t| t.parse())
                .collect::<Result<_, _>>()?,
            structured_only: j
                .get("structured_only")
                .and_then(serde_json::Value::as_bool)
                .unwrap_or(false),
            queries: strings("queries")?,
        })
    }
}

/// Retrieval queries of a plan, including those in predicate sub-plans.
pub fn plan_queries(plan: &PlanNode) -> Vec<String> {
    let mut out = Vec::new();
    collect_queries(plan, &mut out);
    out
}

fn collect_queries(plan: &PlanNode, out: &mut Vec<String>) {
    if let PlanNode::Retrieve { query, .. } = plan {
        if !out.contains(query) {
            out.push(query.clone());
        }
    }
    for child in plan.children() {
        collect_queries(child, out);
    }
}

/// True when an answer is worth asking for.
pub fn is_answer(v: &Value) -> bool {
    match v {
        Value::Null => false,
        Value::Text(s) => !s.trim().is_empty(),
        Value::List(items) => !items.is_empty(),
        _ => true,
    }
}

/// Gold answer of a resolved plan over canonical events.
pub fn oracle_answer(plan: &PlanNode, ctx: &ExecContext) -> Result<Option<Value>, ExecError> {
    let run = execute(plan, ctx)?;
    Ok(match run.result.output {
        Output::Scalar(v) if is_answer(&v) => Some(v),
        _ => None,
    })
}

/// One instance of `t`, or why there is none. `Ok(None)` means the
/// oracle answer was empty.
pub fn instantiate(
    t: &Template,
    persona: &Persona,
    period: Period,
    ctx: &ExecContext,
    rng: &mut ChaCha8Rng,
) -> Result<Option<QuestionInstance>, PersonaError> {
    let mut slots = fill_slots(t, persona, period, rng)?;
    slots.insert("mother_lower".into(), persona.mother.to_lowercase());
    slots.insert("father_lower".into(), persona.father.to_lowercase());
    let question = substitute(t.text, &slots);
    let plan = parse_plan(&substitute(t.plan, &slots)).map_err(|e| PersonaError::BadTemplate {
        template: t.id.to_string(),
        message: e.to_string(),
    })?;
    let queries = plan_queries(&plan);
    let mut kinds: BTreeSet<EventKind> = BTreeSet::new();
    for q in &queries {
        let sel = Selector::from_query(q).ok_or_else(|| PersonaError::BadTemplate {
            template: t.id.to_string(),
            message: format!("query `{q}` has no gold selector"),
        })?;
        kinds.insert(sel.kind());
    }
    let gold = match oracle_answer(&plan, ctx) {
        Ok(Some(v)) => v,
        Ok(None) | Err(ExecError::EmptyAggregate { .. }) => return Ok(None),
        Err(e) => {
            return Err(PersonaError::BadTemplate {
                template: t.id.to_string(),
                message: e.to_string(),
            })
        }
    };
    let mut tags: Vec<Tag> = t.tags.to_vec();
    if kinds.len() > 1 {
        tags.push(Tag::MultiSource);
    }
    tags.sort();
    Ok(Some(QuestionInstance {
        id: String::new(),
        persona: persona.id.clone(),
        template: t.id.to_string(),
        question,
        plan: render_plan(&plan),
        gold,
        tags,
        structured_only: kinds.iter().all(|k| k.is_structured()),
        queries,
    }))
}

/// Up to `count` distinct questions for a persona, cycling through the
/// templates. Templates without a valid filling for this persona and
/// instances with empty answers are skipped.
pub fn instantiate_questions(
    templates: &[Template],
    persona: &Persona,
    canonical: &[CanonicalEvent],
    period: Period,
    count: usize,
    seed: u64,
) -> Result<Vec<QuestionInstance>, PersonaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7175_6573_7469_6f6e);
    let ctx = ExecContext::new(period.now(), Arc::new(CanonicalBackend::new(canonical)));
    let mut out: Vec<QuestionInstance> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut dead: BTreeSet<&str> = BTreeSet::new();
    let max_attempts = count.saturating_mul(12).max(templates.len() * 4);
    for attempt in 0..max_attempts {
        if out.len() >= count || dead.len() == templates.len() {
            break;
        }
        let t = &templates[attempt % templates.len()];
        if dead.contains(t.id) {
            continue;
        }
        match instantiate(t, persona, period, &ctx, &mut rng) {
            Ok(Some(q)) => {
                if seen.insert(q.question.clone()) {
                    out.push(q);
                }
            }
            Ok(None) => {}
            Err(PersonaError::NoValidFilling(_)) => {
                dead.insert(t.id);
            }
            Err(e) => return Err(e),
        }
    }
    for (i, q) in out.iter_mut().enumerate() {
        q.id = format!("{}-q{:03}", persona.id, i);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persona::{generate_canonical_events, generate_persona};
    use crate::plan::{validate_plan, Level};

    #[test]
    fn every_template_parses_and_validates() {
        let p = generate_persona(1);
        let period = Period::years(2020, 2024);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in TEMPLATES {
            let mut slots = match fill_slots(t, &p, period, &mut rng) {
                Ok(s) => s,
                Err(_) => t
                    .slots()
                    .into_iter()
                    .flat_map(|s| {
                        let v = if s == "year" { "2024" } else { "x" };
                        [(format!("{s}_lower"), v.into()), (s, v.into())]
                    })
                    .collect(),
            };
            slots.insert("mother_lower".into(), "m".into());
            slots.insert("father_lower".into(), "f".into());
            let text = substitute(t.plan, &slots);
            let plan = parse_plan(&text).unwrap_or_else(|e| panic!("{}: {e}", t.id));
            let diags = validate_plan(&plan);
            assert!(
                diags.iter().all(|d| d.level != Level::Error),
                "{}: {diags:?}",
                t.id
            );
            assert!(
                !placeholders(&substitute(t.text, &slots))
                    .iter()
                    .any(|_| true),
                "{}",
                t.id
            );
        }
    }

    #[test]
    fn kid_template_needs_kids() {
        let t = template("meet_kid").unwrap();
        let mut p = generate_persona(1);
        p.kids.clear();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            fill_slots(t, &p, Period::years(2024, 2024), &mut rng),
            Err(PersonaError::NoValidFilling(id)) if id == "meet_kid"
        ));
    }

    #[test]
    fn friend_meeting_count_matches_a_direct_count() {
        let p = generate_persona(6);
        let period = Period::years(2024, 2024);
        let canon = generate_canonical_events(&p, period, &p.frequencies.scaled(0.3), 6).unwrap();
        let qs = instantiate_questions(
            &[*template("meet_friend").unwrap()],
            &p,
            &canon,
            period,
            3,
            6,
        )
        .unwrap();
        assert!(!qs.is_empty());
        for q in &qs {
            let friend = p
                .friends
                .iter()
                .find(|f| q.question.contains(f.as_str()))
                .unwrap();
            let direct = canon
                .iter()
                .filter(|c| c.kind == EventKind::Meeting)
                .filter(|c| matches!(c.attrs.get("participants"), Some(Value::List(ps)) if ps.iter().any(|v| v.as_text() == Some(friend))))
                .count();
            assert_eq!(q.gold, Value::Int(direct as i64), "{}", q.question);
            assert!(!q.structured_only);
        }
        let again = instantiate_questions(
            &[*template("meet_friend").unwrap()],
            &p,
            &canon,
            period,
            3,
            6,
        )
        .unwrap();
        assert_eq!(qs, again);
    }

    #[test]
    fn instances_round_trip_through_json() {
        let p = generate_persona(2);
        let period = Period::years(2024, 2024);
        let canon = generate_canonical_events(&p, period, &p.frequencies.scaled(0.1), 2).unwrap();
        let qs = instantiate_questions(TEMPLATES, &p, &canon, period, 40, 2).unwrap();
        assert!(qs.len() >= 20, "{}", qs.len());
        for q in &qs {
            assert_eq!(
                QuestionInstance::from_json_line(&q.to_json_line()).unwrap(),
                *q
            );
            assert!(is_answer(&q.gold));
        }
    }
}
