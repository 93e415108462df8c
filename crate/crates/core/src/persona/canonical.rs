//! Canonical events: schema-complete ground truth drawn from a persona.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use super::pools::*;
use super::profile::{EventRates, Persona};
use super::PersonaError;
use crate::event::{at_midnight, Event, EventId, Source, TimeSpan};
use crate::value::{Value, DATETIME_FORMAT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Music,
    Movie,
    TvEpisode,
    Purchase,
    Workout,
    Meeting,
    DoctorAppointment,
    Trip,
    Anniversary,
    Milestone,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::Music,
        EventKind::Movie,
        EventKind::TvEpisode,
        EventKind::Purchase,
        EventKind::Workout,
        EventKind::Meeting,
        EventKind::DoctorAppointment,
        EventKind::Trip,
        EventKind::Anniversary,
        EventKind::Milestone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::Music => "music",
            EventKind::Movie => "movie",
            EventKind::TvEpisode => "tv_episode",
            EventKind::Purchase => "purchase",
            EventKind::Workout => "workout",
            EventKind::Meeting => "meeting",
            EventKind::DoctorAppointment => "doctor_appointment",
            EventKind::Trip => "trip",
            EventKind::Anniversary => "anniversary",
            EventKind::Milestone => "milestone",
        }
    }

    /// Where the canonical record naturally lives.
    pub fn home_source(self) -> Source {
        match self {
            EventKind::Music => Source::MusicStream,
            EventKind::Movie => Source::MovieStream,
            EventKind::TvEpisode => Source::TvseriesStream,
            EventKind::Purchase => Source::OnlinePurchase,
            EventKind::Workout => Source::Workout,
            EventKind::Milestone => Source::SocialMedia,
            _ => Source::Calendar,
        }
    }

    /// Kinds recorded by a structured source.
    pub fn is_structured(self) -> bool {
        self.home_source().is_structured()
    }

    /// Required attribute keys, besides the span-derived ones.
    pub fn schema(self) -> &'static [&'static str] {
        match self {
            EventKind::Music => &["song_name", "artist", "genre", "duration"],
            EventKind::Movie => &["movie_title", "genre", "duration", "stream_style"],
            EventKind::TvEpisode => &[
                "tvseries_title",
                "season",
                "episode_number",
                "episode_name",
                "duration",
                "stream_style",
            ],
            EventKind::Purchase => &[
                "product",
                "category",
                "product_quantity",
                "price",
                "currency",
            ],
            EventKind::Workout => &[
                "workout_type",
                "duration",
                "duration_unit",
                "minimum_heart_rate",
                "maximum_heart_rate",
                "average_heart_rate",
            ],
            EventKind::Meeting => &["participants", "activity", "location", "place_type", "city"],
            EventKind::DoctorAppointment => &["doctor", "specialty", "reason"],
            EventKind::Trip => &["destination", "country", "region", "transport"],
            EventKind::Anniversary => &["occasion", "person"],
            EventKind::Milestone => &["milestone", "title", "organization", "city"],
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventKind {
    type Err = PersonaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PersonaError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalEvent {
    pub id: EventId,
    pub kind: EventKind,
    pub span: TimeSpan,
    pub attrs: BTreeMap<String, Value>,
}

impl CanonicalEvent {
    /// The canonical record as a store event under its home source.
    pub fn to_event(&self) -> Event {
        Event::new(
            self.id.clone(),
            self.kind.home_source(),
            self.span,
            self.attrs.clone(),
        )
        .expect("canonical attrs are valid")
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).and_then(Value::as_text)
    }

    pub fn to_json_line(&self) -> String {
        let mut obj = Map::new();
        obj.insert("id".into(), Json::String(self.id.to_string()));
        obj.insert("kind".into(), Json::String(self.kind.name().into()));
        let fmt = |dt: NaiveDateTime| Json::String(dt.format(DATETIME_FORMAT).to_string());
        obj.insert("start".into(), fmt(self.span.start()));
        obj.insert("end".into(), fmt(self.span.end()));
        let attrs: Map<String, Json> = self
            .attrs
            .iter()
            .map(|(k, v)| (k.clone(), v.to_json()))
            .collect();
        obj.insert("attrs".into(), Json::Object(attrs));
        Json::Object(obj).to_string()
    }

    pub fn from_json_line(line: &str) -> Result<Self, PersonaError> {
        let bad = |m: &str| {
            PersonaError::BadRecord(format!(
                "{m}: {}",
                line.chars().take(60).collect::<String>()
            ))
        };
        let json: Json = serde_json::from_str(line).map_err(|e| bad(&e.to_string()))?;
        let field = |k: &str| json.get(k).and_then(Json::as_str).ok_or_else(|| bad(k));
        let time = |k: &str| -> Result<NaiveDateTime, PersonaError> {
            match Value::parse_temporal(field(k)?) {
                Some(Value::DateTime(dt)) => Ok(dt),
                _ => Err(bad(k)),
            }
        };
        let span = TimeSpan::new(time("start")?, time("end")?).map_err(|e| bad(&e.to_string()))?;
        let attrs = json
            .get("attrs")
            .and_then(Json::as_object)
            .ok_or_else(|| bad("attrs"))?
            .iter()
            .map(|(k, v)| Value::from_json(v).map(|v| (k.clone(), v)))
            .collect::<Result<_, _>>()
            .map_err(|e| bad(&e.to_string()))?;
        Ok(CanonicalEvent {
            id: EventId::new(field("id")?),
            kind: field("kind")?.parse()?,
            span,
            attrs,
        })
    }
}

/// Inclusive date range events are generated over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        Period { start, end }
    }

    /// Whole calendar years.
    pub fn years(first: i32, last: i32) -> Self {
        Period {
            start: NaiveDate::from_ymd_opt(first, 1, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(last, 12, 31).expect("valid date"),
        }
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        self.start.iter_days().take_while({
            let end = self.end;
            move |d| *d <= end
        })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn calendar_years(&self) -> std::ops::RangeInclusive<i32> {
        self.start.year()..=self.end.year()
    }

    /// Midnight after the last day; the clock questions are asked at.
    pub fn now(&self) -> NaiveDateTime {
        at_midnight(self.end + Duration::days(1))
    }
}

/// Proposed event before ids and overlap resolution.
struct Draft {
    kind: EventKind,
    start: NaiveDateTime,
    length: Duration,
    attrs: Vec<(&'static str, Value)>,
}

fn at(day: NaiveDate, hour: u32, minute: u32) -> NaiveDateTime {
    day.and_time(NaiveTime::from_hms_opt(hour, minute, 0).expect("valid time"))
}

fn all_day(day: NaiveDate) -> (NaiveDateTime, Duration) {
    (at_midnight(day), Duration::seconds(86_399))
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0)
}

fn text(s: impl Into<String>) -> Value {
    Value::Text(s.into())
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty pool")
}

fn pick_pref<'a>(
    rng: &mut ChaCha8Rng,
    preferred: &'a [String],
    fallback: &'a [&'a str],
    p: f64,
) -> &'a str {
    if !preferred.is_empty() && rng.gen_bool(p) {
        pick(rng, preferred).as_str()
    } else {
        pick(rng, fallback)
    }
}

fn song(rng: &mut ChaCha8Rng, persona: &Persona) -> Vec<(&'static str, Value)> {
    let artist = pick_pref(
        rng,
        &persona.favorite_artists,
        &ARTISTS.iter().map(|a| a.0).collect::<Vec<_>>(),
        0.85,
    )
    .to_string();
    let genre = ARTISTS
        .iter()
        .find(|a| a.0 == artist)
        .map_or("pop", |a| a.1);
    let name = format!("{} {}", pick(rng, SONG_WORDS_A), pick(rng, SONG_WORDS_B));
    vec![
        ("song_name", text(name)),
        ("artist", text(artist)),
        ("genre", text(genre)),
        ("duration", Value::Int(rng.gen_range(150..=330))),
    ]
}

/// Builds every draft for the period, in no particular order.
fn drafts(
    persona: &Persona,
    period: Period,
    rates: &EventRates,
    rng: &mut ChaCha8Rng,
) -> Vec<Draft> {
    let mut out = Vec::new();
    let per_day = |weekly: f64| weekly / 7.0;
    // episode progress per series: (season, episode)
    let mut progress: BTreeMap<String, (i64, i64)> = BTreeMap::new();
    let all_series: Vec<&str> = SERIES.iter().map(|s| s.0).collect();
    let all_products: Vec<&str> = PRODUCTS.iter().map(|p| p.0).collect();
    for day in period.days() {
        // workouts, each possibly with music
        for _ in 0..poisson(rng, per_day(rates.workouts_per_week)) {
            let kind = pick(rng, &persona.workouts).clone();
            let minutes: i64 = rng.gen_range(30..=120);
            let start = at(day, rng.gen_range(6..=20), rng.gen_range(0..4) * 15);
            let min_hr: i64 = rng.gen_range(85..=125);
            let max_hr: i64 = rng.gen_range(150..=195);
            let avg =
                (rng.gen_range(min_hr as f64 + 10.0..max_hr as f64 - 5.0) * 100.0).round() / 100.0;
            out.push(Draft {
                kind: EventKind::Workout,
                start,
                length: Duration::minutes(minutes),
                attrs: vec![
                    ("workout_type", text(kind)),
                    ("duration", Value::Int(minutes)),
                    ("duration_unit", text("min")),
                    ("minimum_heart_rate", Value::Int(min_hr)),
                    ("maximum_heart_rate", Value::Int(max_hr)),
                    ("average_heart_rate", Value::Real(avg)),
                ],
            });
            if rates.music_during_workout > 0.0 && rng.gen_bool(rates.music_during_workout) {
                let mut t = start;
                while t < start + Duration::minutes(minutes - 5) {
                    let attrs = song(rng, persona);
                    let secs = attrs[3].1.as_f64().unwrap_or(200.0) as i64;
                    out.push(Draft {
                        kind: EventKind::Music,
                        start: t,
                        length: Duration::seconds(secs),
                        attrs,
                    });
                    t += Duration::seconds(secs + rng.gen_range(2..20));
                }
            }
        }
        // music in sessions
        let mut songs = poisson(rng, rates.music_per_day);
        while songs > 0 {
            let size = (1 + poisson(rng, rates.songs_per_session - 1.0)).min(songs);
            songs -= size;
            let mut t = at(day, rng.gen_range(7..=22), rng.gen_range(0..60));
            for _ in 0..size {
                let attrs = song(rng, persona);
                let secs = attrs[3].1.as_f64().unwrap_or(200.0) as i64;
                out.push(Draft {
                    kind: EventKind::Music,
                    start: t,
                    length: Duration::seconds(secs),
                    attrs,
                });
                t += Duration::seconds(secs + rng.gen_range(2..40));
            }
        }
        for _ in 0..poisson(rng, per_day(rates.movies_per_week)) {
            let fav: Vec<&str> = persona.favorite_movies.iter().map(String::as_str).collect();
            let title = if !fav.is_empty() && rng.gen_bool(0.7) {
                *pick(rng, &fav)
            } else {
                pick(rng, MOVIES).0
            };
            let genre = MOVIES
                .iter()
                .find(|m| m.0 == title)
                .map_or("drama", |m| m.1);
            let secs: i64 = rng.gen_range(80..=150) * 60;
            out.push(Draft {
                kind: EventKind::Movie,
                start: at(day, rng.gen_range(18..=22), rng.gen_range(0..60)),
                length: Duration::seconds(secs),
                attrs: vec![
                    ("movie_title", text(title)),
                    ("genre", text(genre)),
                    ("duration", Value::Int(secs)),
                    ("stream_style", text("movie")),
                ],
            });
        }
        let episodes = poisson(rng, per_day(rates.episodes_per_week));
        if episodes > 0 {
            let series = pick_pref(rng, &persona.favorite_series, &all_series, 0.85).to_string();
            let mut t = at(day, rng.gen_range(17..=22), rng.gen_range(0..60));
            for _ in 0..episodes {
                let (season, ep) = progress.entry(series.clone()).or_insert((1, 0));
                *ep += 1;
                if *ep > 10 {
                    *season += 1;
                    *ep = 1;
                }
                let (season, ep) = (*season, *ep);
                let secs: i64 = rng.gen_range(22..=55) * 60;
                let name = EPISODE_WORDS
                    [((season * 7 + ep * 3) as usize + series.len()) % EPISODE_WORDS.len()];
                out.push(Draft {
                    kind: EventKind::TvEpisode,
                    start: t,
                    length: Duration::seconds(secs),
                    attrs: vec![
                        ("tvseries_title", text(&series)),
                        ("season", Value::Int(season)),
                        ("episode_number", Value::Int(ep)),
                        ("episode_name", text(name)),
                        ("duration", Value::Int(secs)),
                        ("stream_style", text("tv_series")),
                    ],
                });
                t += Duration::seconds(secs + rng.gen_range(10..120));
            }
        }
        for _ in 0..poisson(rng, per_day(rates.purchases_per_week)) {
            let cats: Vec<&str> = persona
                .shopping_categories
                .iter()
                .map(String::as_str)
                .collect();
            let category = if !cats.is_empty() && rng.gen_bool(0.8) {
                *pick(rng, &cats)
            } else {
                pick(rng, SHOPPING_CATEGORIES)
            };
            let options: Vec<&(&str, &str, i64)> =
                PRODUCTS.iter().filter(|p| p.1 == category).collect();
            let &(product, category, cents) = if options.is_empty() {
                PRODUCTS
                    .iter()
                    .find(|p| p.0 == *pick(rng, &all_products))
                    .expect("pool product")
            } else {
                *pick(rng, &options)
            };
            let qty: i64 = if rng.gen_bool(0.75) {
                1
            } else {
                rng.gen_range(2..=3)
            };
            out.push(Draft {
                kind: EventKind::Purchase,
                start: at(day, rng.gen_range(8..=23), rng.gen_range(0..60)),
                length: Duration::zero(),
                attrs: vec![
                    ("product", text(product)),
                    ("category", text(category)),
                    ("product_quantity", Value::Int(qty)),
                    ("price", Value::Real((cents * qty) as f64 / 100.0)),
                    ("currency", text("EUR")),
                ],
            });
        }
        for _ in 0..poisson(rng, per_day(rates.meetings_per_week)) {
            out.push(meeting(persona, day, rng));
        }
        for _ in 0..poisson(rng, rates.doctor_per_year / 365.0) {
            if persona.doctors.is_empty() {
                break;
            }
            let mut d = day;
            while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                d += Duration::days(1);
            }
            let doctor = pick(rng, &persona.doctors);
            let reason = SPECIALTIES
                .iter()
                .find(|s| s.0 == doctor.specialty)
                .map_or("checkup", |s| s.1);
            out.push(Draft {
                kind: EventKind::DoctorAppointment,
                start: at(d, rng.gen_range(8..=16), rng.gen_range(0..4) * 15),
                length: Duration::minutes(rng.gen_range(2..=4) * 15),
                attrs: vec![
                    ("doctor", text(&doctor.name)),
                    ("specialty", text(&doctor.specialty)),
                    ("reason", text(reason)),
                ],
            });
        }
        for _ in 0..poisson(rng, rates.trips_per_year / 365.0) {
            let options: Vec<&(&str, &str, &str)> = DESTINATIONS
                .iter()
                .filter(|d| persona.travel_regions.iter().any(|r| r == d.2))
                .collect();
            let &(dest, country, region) = if options.is_empty() {
                pick(rng, DESTINATIONS)
            } else {
                *pick(rng, &options)
            };
            let start = at(day, rng.gen_range(6..=12), 0);
            let end = at(
                day + Duration::days(rng.gen_range(3..=12)),
                rng.gen_range(14..=22),
                0,
            );
            out.push(Draft {
                kind: EventKind::Trip,
                start,
                length: end - start,
                attrs: vec![
                    ("destination", text(dest)),
                    ("country", text(country)),
                    ("region", text(region)),
                    ("transport", text(*pick(rng, TRANSPORT))),
                ],
            });
        }
    }
    out.extend(dated_events(persona, period));
    out
}

fn meeting(persona: &Persona, day: NaiveDate, rng: &mut ChaCha8Rng) -> Draft {
    let contacts = persona.contacts();
    let mut participants: Vec<String> = if rng.gen_bool(0.2) {
        vec![persona.mother.clone(), persona.father.clone()]
    } else {
        let n = if rng.gen_bool(0.7) { 1 } else { 2 };
        contacts.choose_multiple(rng, n).cloned().collect()
    };
    participants.dedup();
    let &(activity, place_type) = pick(rng, MEETING_ACTIVITIES);
    let location = if place_type == "restaurant" {
        let fav: Vec<&str> = persona
            .favorite_restaurants
            .iter()
            .map(String::as_str)
            .collect();
        if !fav.is_empty() && rng.gen_bool(0.8) {
            pick(rng, &fav).to_string()
        } else {
            pick(rng, RESTAURANTS).0.to_string()
        }
    } else {
        let options: Vec<&str> = PLACES
            .iter()
            .filter(|p| p.1 == place_type)
            .map(|p| p.0)
            .collect();
        pick(rng, &options).to_string()
    };
    let (hour, hours) = match activity {
        "lunch" => (rng.gen_range(12..=13), 1),
        "dinner" => (rng.gen_range(18..=20), 2),
        "coffee" => (rng.gen_range(9..=16), 1),
        "drinks" => (rng.gen_range(19..=21), 2),
        "walk" => (rng.gen_range(9..=17), 1),
        "movie night" => (20, 2),
        _ => (rng.gen_range(10..=15), 2),
    };
    Draft {
        kind: EventKind::Meeting,
        start: at(day, hour, rng.gen_range(0..4) * 15),
        length: Duration::hours(hours),
        attrs: vec![
            (
                "participants",
                Value::List(participants.into_iter().map(Value::Text).collect()),
            ),
            ("activity", text(activity)),
            ("location", text(location)),
            ("place_type", text(place_type)),
            ("city", text(&persona.residence_at(day).city)),
        ],
    }
}

/// Birthdays, wedding anniversaries and life milestones inside the period.
fn dated_events(persona: &Persona, period: Period) -> Vec<Draft> {
    let mut out = Vec::new();
    let mut people: Vec<(String, NaiveDate)> = Vec::new();
    // parents' and siblings' birthdays are not in the questionnaire; derive
    // stable ones from the name
    let derived = |name: &str, year: i32| {
        let h = name
            .bytes()
            .fold(7u32, |a, b| a.wrapping_mul(31).wrapping_add(b as u32));
        NaiveDate::from_yo_opt(year, 1 + h % 365).expect("valid ordinal")
    };
    people.push((persona.mother.clone(), derived(&persona.mother, 1950)));
    people.push((persona.father.clone(), derived(&persona.father, 1948)));
    for s in &persona.siblings {
        people.push((s.clone(), derived(s, 1970)));
    }
    if let Some(p) = &persona.partner {
        people.push((p.clone(), derived(p, 1975)));
    }
    for k in &persona.kids {
        people.push((k.name.clone(), k.birth_date));
    }
    for year in period.calendar_years() {
        for (name, born) in &people {
            let Some(day) = born
                .with_year(year)
                .or_else(|| NaiveDate::from_ymd_opt(year, 3, 1))
            else {
                continue;
            };
            if period.contains(day) && day > *born {
                let (start, length) = all_day(day);
                out.push(Draft {
                    kind: EventKind::Anniversary,
                    start,
                    length,
                    attrs: vec![("occasion", text("birthday")), ("person", text(name))],
                });
            }
        }
        if let (Some(partner), Some(wed)) = (&persona.partner, persona.wedding_date) {
            if let Some(day) = wed
                .with_year(year)
                .filter(|d| period.contains(*d) && *d > wed)
            {
                let (start, length) = all_day(day);
                out.push(Draft {
                    kind: EventKind::Anniversary,
                    start,
                    length,
                    attrs: vec![
                        ("occasion", text("wedding anniversary")),
                        ("person", text(partner)),
                    ],
                });
            }
        }
    }
    let mut milestone = |day: NaiveDate, what: &str, title: &str, org: &str, city: &str| {
        if period.contains(day) {
            let (start, length) = all_day(day);
            out.push(Draft {
                kind: EventKind::Milestone,
                start,
                length,
                attrs: vec![
                    ("milestone", text(what)),
                    ("title", text(title)),
                    ("organization", text(org)),
                    ("city", text(city)),
                ],
            });
        }
    };
    for j in &persona.career {
        milestone(j.start, "new job", &j.title, &j.company, &j.city);
    }
    for e in &persona.education {
        milestone(e.end, "graduation", &e.degree, &e.institution, &e.city);
    }
    for r in persona.residences.iter().skip(1) {
        milestone(r.start, "moved", &r.city, "none", &r.city);
    }
    for p in &persona.pets {
        let city = persona.residence_at(p.start).city.clone();
        milestone(p.start, "new pet", &p.name, &p.kind, &city);
    }
    for k in &persona.kids {
        let city = persona.residence_at(k.birth_date).city.clone();
        milestone(k.birth_date, "child born", &k.name, "none", &city);
    }
    out
}

/// Events of one kind never overlap: each starts at least a minute after
/// the previous one ended. Whole-day kinds are exempt.
fn resolve_overlaps(drafts: &mut [Draft]) {
    drafts.sort_by(|a, b| a.kind.cmp(&b.kind).then(a.start.cmp(&b.start)));
    let mut cursor: BTreeMap<EventKind, NaiveDateTime> = BTreeMap::new();
    for d in drafts.iter_mut() {
        if matches!(d.kind, EventKind::Anniversary | EventKind::Milestone) {
            continue;
        }
        if let Some(&free) = cursor.get(&d.kind) {
            if d.start < free {
                d.start = free;
            }
        }
        cursor.insert(d.kind, d.start + d.length + Duration::minutes(1));
    }
}

/// Draws the persona's canonical events over `period`. Ids are
/// `<persona>-c<n>` in (start, kind) order.
pub fn generate_canonical_events(
    persona: &Persona,
    period: Period,
    rates: &EventRates,
    seed: u64,
) -> Result<Vec<CanonicalEvent>, PersonaError> {
    if period.end < period.start + Duration::days(364) {
        return Err(PersonaError::PeriodTooShort {
            start: period.start,
            end: period.end,
        });
    }
    if !rates.is_valid() {
        return Err(PersonaError::BadRates);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6576_656e_7473);
    let mut drafts = drafts(persona, period, rates, &mut rng);
    resolve_overlaps(&mut drafts);
    drafts.sort_by(|a, b| a.start.cmp(&b.start).then(a.kind.cmp(&b.kind)));
    let width = drafts.len().max(1).to_string().len().max(5);
    Ok(drafts
        .into_iter()
        .enumerate()
        .map(|(i, d)| CanonicalEvent {
            id: EventId::new(format!("{}-c{:0width$}", persona.id, i)),
            kind: d.kind,
            span: TimeSpan::new(d.start, d.start + d.length).expect("non-negative length"),
            attrs: d
                .attrs
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        })
        .collect())
}
