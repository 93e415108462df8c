//! Seeded personas: the questionnaire a user would fill in.

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pools::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kid {
    pub name: String,
    pub birth_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pet {
    pub name: String,
    pub kind: String,
    pub start: NaiveDate,
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Education {
    pub degree: String,
    pub institution: String,
    pub city: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub title: String,
    pub company: String,
    pub city: String,
    pub start: NaiveDate,
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Residence {
    pub city: String,
    pub country: String,
    pub start: NaiveDate,
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Doctor {
    pub name: String,
    pub specialty: String,
}

/// Average behaviour rates. Daily, weekly or yearly as the name says.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRates {
    pub music_per_day: f64,
    pub movies_per_week: f64,
    pub episodes_per_week: f64,
    pub purchases_per_week: f64,
    pub workouts_per_week: f64,
    pub meetings_per_week: f64,
    pub doctor_per_year: f64,
    pub trips_per_year: f64,
    /// Mean number of songs in one listening session.
    pub songs_per_session: f64,
    /// Chance that a workout comes with a music session.
    pub music_during_workout: f64,
}

impl Default for EventRates {
    fn default() -> Self {
        EventRates {
            music_per_day: 20.0,
            movies_per_week: 1.5,
            episodes_per_week: 4.0,
            purchases_per_week: 1.5,
            workouts_per_week: 3.0,
            meetings_per_week: 2.0,
            doctor_per_year: 5.0,
            trips_per_year: 3.0,
            songs_per_session: 8.0,
            music_during_workout: 0.5,
        }
    }
}

impl EventRates {
    pub fn zero() -> Self {
        EventRates {
            music_per_day: 0.0,
            movies_per_week: 0.0,
            episodes_per_week: 0.0,
            purchases_per_week: 0.0,
            workouts_per_week: 0.0,
            meetings_per_week: 0.0,
            doctor_per_year: 0.0,
            trips_per_year: 0.0,
            songs_per_session: 8.0,
            music_during_workout: 0.0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        EventRates {
            music_per_day: self.music_per_day * factor,
            movies_per_week: self.movies_per_week * factor,
            episodes_per_week: self.episodes_per_week * factor,
            purchases_per_week: self.purchases_per_week * factor,
            workouts_per_week: self.workouts_per_week * factor,
            meetings_per_week: self.meetings_per_week * factor,
            doctor_per_year: self.doctor_per_year * factor,
            trips_per_year: self.trips_per_year * factor,
            ..self.clone()
        }
    }

    fn rates(&self) -> [f64; 8] {
        [
            self.music_per_day,
            self.movies_per_week,
            self.episodes_per_week,
            self.purchases_per_week,
            self.workouts_per_week,
            self.meetings_per_week,
            self.doctor_per_year,
            self.trips_per_year,
        ]
    }

    /// Rates are finite and non-negative, session size at least one song,
    /// the workout-music chance a probability.
    pub fn is_valid(&self) -> bool {
        self.rates().iter().all(|r| r.is_finite() && *r >= 0.0)
            && self.songs_per_session.is_finite()
            && self.songs_per_session >= 1.0
            && (0.0..=1.0).contains(&self.music_during_workout)
    }
}

/// The questionnaire: thirty fields besides the id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub id: String,
    pub name: String,
    pub gender: Gender,
    pub birth_date: NaiveDate,
    pub birth_city: String,
    pub mother: String,
    pub father: String,
    pub siblings: Vec<String>,
    pub partner: Option<String>,
    pub wedding_date: Option<NaiveDate>,
    pub kids: Vec<Kid>,
    pub pets: Vec<Pet>,
    pub friends: Vec<String>,
    pub education: Vec<Education>,
    pub career: Vec<Job>,
    pub residences: Vec<Residence>,
    pub music_genres: Vec<String>,
    pub favorite_artists: Vec<String>,
    pub movie_genres: Vec<String>,
    pub favorite_movies: Vec<String>,
    pub tv_genres: Vec<String>,
    pub favorite_series: Vec<String>,
    pub shopping_categories: Vec<String>,
    pub travel_regions: Vec<String>,
    pub cuisines: Vec<String>,
    pub favorite_restaurants: Vec<String>,
    pub favorite_places: Vec<String>,
    pub hobbies: Vec<String>,
    pub workouts: Vec<String>,
    pub doctors: Vec<Doctor>,
    pub frequencies: EventRates,
}

/// Reference day personas are generated against: careers run up to it.
pub fn reference_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 12, 31).expect("valid date")
}

fn date_between(rng: &mut ChaCha8Rng, from: NaiveDate, to: NaiveDate) -> NaiveDate {
    let span = (to - from).num_days().max(0);
    from + chrono::Duration::days(rng.gen_range(0..=span))
}

fn years_after(d: NaiveDate, years: i32) -> NaiveDate {
    d.with_year(d.year() + years)
        .unwrap_or_else(|| NaiveDate::from_ymd_opt(d.year() + years, 3, 1).expect("valid date"))
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty pool")
}

fn sample<T: Clone>(rng: &mut ChaCha8Rng, items: &[T], lo: usize, hi: usize) -> Vec<T> {
    let n = rng.gen_range(lo..=hi).min(items.len());
    items.choose_multiple(rng, n).cloned().collect()
}

fn sample_names(rng: &mut ChaCha8Rng, items: &[&str], lo: usize, hi: usize) -> Vec<String> {
    sample(rng, items, lo, hi)
        .into_iter()
        .map(str::to_string)
        .collect()
}

struct Names {
    used: Vec<String>,
}

impl Names {
    fn fresh(&mut self, rng: &mut ChaCha8Rng, gender: Gender, last: Option<&str>) -> String {
        loop {
            let first = match gender {
                Gender::Female => pick(rng, FIRST_NAMES_F),
                Gender::Male => pick(rng, FIRST_NAMES_M),
            };
            let last = last.unwrap_or_else(|| pick(rng, LAST_NAMES));
            let name = format!("{first} {last}");
            // first names stay unique too, so a first name identifies a person
            if !self
                .used
                .iter()
                .any(|u| u.split(' ').next() == Some(*first))
            {
                self.used.push(name.clone());
                return name;
            }
        }
    }
}

fn any_gender(rng: &mut ChaCha8Rng) -> Gender {
    if rng.gen_bool(0.5) {
        Gender::Female
    } else {
        Gender::Male
    }
}

fn jitter(rng: &mut ChaCha8Rng, base: f64) -> f64 {
    let x = base * rng.gen_range(0.6..1.4);
    (x * 100.0).round() / 100.0
}

/// Deterministic for a seed.
pub fn generate_persona(seed: u64) -> Persona {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0070_6572_736f_6e61);
    let gender = any_gender(&mut rng);
    let mut names = Names { used: Vec::new() };
    let family = *pick(&mut rng, LAST_NAMES);
    let name = names.fresh(&mut rng, gender, Some(family));
    let father = names.fresh(&mut rng, Gender::Male, Some(family));
    let mother = names.fresh(&mut rng, Gender::Female, None);
    let siblings = (0..rng.gen_range(0..=2))
        .map(|_| {
            let g = any_gender(&mut rng);
            names.fresh(&mut rng, g, Some(family))
        })
        .collect();

    let birth_date = date_between(
        &mut rng,
        NaiveDate::from_ymd_opt(1965, 1, 1).expect("valid date"),
        NaiveDate::from_ymd_opt(1996, 12, 31).expect("valid date"),
    );
    let (birth_city, birth_country) = *pick(&mut rng, CITIES);

    let mut education = Vec::new();
    let (mut city, mut country) = (birth_city, birth_country);
    let mut residences = Vec::new();
    let mut moved_at = birth_date;
    let uni_start = NaiveDate::from_ymd_opt(birth_date.year() + 19, 10, 1).expect("valid date");
    let (uni_city, uni_country) = *pick(&mut rng, CITIES);
    let institution = pick(&mut rng, UNIVERSITIES).to_string();
    let bachelor_end = NaiveDate::from_ymd_opt(uni_start.year() + 3, 7, 15).expect("valid date");
    education.push(Education {
        degree: DEGREES[if rng.gen_bool(0.5) { 0 } else { 3 }].to_string(),
        institution: institution.clone(),
        city: uni_city.to_string(),
        start: uni_start,
        end: bachelor_end,
    });
    let mut study_end = bachelor_end;
    if rng.gen_bool(0.5) {
        let end = NaiveDate::from_ymd_opt(bachelor_end.year() + 2, 7, 15).expect("valid date");
        education.push(Education {
            degree: DEGREES[if rng.gen_bool(0.5) { 1 } else { 2 }].to_string(),
            institution,
            city: uni_city.to_string(),
            start: NaiveDate::from_ymd_opt(bachelor_end.year(), 10, 1).expect("valid date"),
            end,
        });
        study_end = end;
    }
    if uni_city != city {
        residences.push(Residence {
            city: city.to_string(),
            country: country.to_string(),
            start: moved_at,
            end: Some(uni_start),
        });
        moved_at = uni_start;
        (city, country) = (uni_city, uni_country);
    }

    // the last job starts in the years the generator usually covers
    let reference = reference_date();
    let last_start = date_between(
        &mut rng,
        NaiveDate::from_ymd_opt(2020, 2, 1).expect("valid date"),
        NaiveDate::from_ymd_opt(2024, 9, 1).expect("valid date"),
    );
    let first_start = study_end + chrono::Duration::days(rng.gen_range(30..200));
    let n_jobs = if first_start + chrono::Duration::days(800) < last_start {
        rng.gen_range(1..=3)
    } else {
        1
    };
    let mut starts = vec![last_start];
    for _ in 1..n_jobs {
        starts.push(date_between(
            &mut rng,
            first_start,
            last_start - chrono::Duration::days(365),
        ));
    }
    starts.sort();
    starts.dedup();
    let mut career = Vec::new();
    for (i, &start) in starts.iter().enumerate() {
        let (job_city, job_country) = if i == 0 || rng.gen_bool(0.6) {
            (city, country)
        } else {
            *pick(&mut rng, CITIES)
        };
        if job_city != city {
            residences.push(Residence {
                city: city.to_string(),
                country: country.to_string(),
                start: moved_at,
                end: Some(start),
            });
            moved_at = start;
            (city, country) = (job_city, job_country);
        }
        let mut title = pick(&mut rng, JOB_TITLES).to_string();
        while career.iter().any(|j: &Job| j.title == title) {
            title = pick(&mut rng, JOB_TITLES).to_string();
        }
        career.push(Job {
            title,
            company: pick(&mut rng, COMPANIES).to_string(),
            city: city.to_string(),
            start,
            end: starts.get(i + 1).copied(),
        });
    }
    residences.push(Residence {
        city: city.to_string(),
        country: country.to_string(),
        start: moved_at,
        end: None,
    });

    let (partner, wedding_date) = if rng.gen_bool(0.6) {
        let g = any_gender(&mut rng);
        let partner = names.fresh(&mut rng, g, None);
        let wed = date_between(
            &mut rng,
            years_after(birth_date, 24),
            years_after(birth_date, 27).min(reference),
        );
        (Some(partner), Some(wed.min(reference)))
    } else {
        (None, None)
    };
    let mut kids = Vec::new();
    if rng.gen_bool(0.55) {
        let lo = years_after(birth_date, 22);
        let hi = years_after(birth_date, 42).min(reference);
        for _ in 0..rng.gen_range(1..=3) {
            if lo >= hi {
                break;
            }
            let g = any_gender(&mut rng);
            kids.push(Kid {
                name: names.fresh(&mut rng, g, Some(family)),
                birth_date: date_between(&mut rng, lo, hi),
            });
        }
        kids.sort_by_key(|k| k.birth_date);
    }
    let pets = (0..rng.gen_range(0..=2))
        .map(|_| {
            let start = date_between(&mut rng, years_after(birth_date, 20), reference);
            let end = rng
                .gen_bool(0.3)
                .then(|| start + chrono::Duration::days(rng.gen_range(365..3650)))
                .filter(|e| *e < reference);
            Pet {
                name: pick(&mut rng, PET_NAMES).to_string(),
                kind: pick(&mut rng, PET_KINDS).to_string(),
                start,
                end,
            }
        })
        .collect();
    let friends = (0..rng.gen_range(4..=7))
        .map(|_| {
            let g = any_gender(&mut rng);
            names.fresh(&mut rng, g, None)
        })
        .collect();

    let music_genres = sample_names(&mut rng, MUSIC_GENRES, 2, 4);
    let favorite_artists = ARTISTS
        .iter()
        .filter(|(_, g)| music_genres.iter().any(|m| m == g))
        .map(|(a, _)| a.to_string())
        .collect();
    let movie_genres = sample_names(&mut rng, MOVIE_GENRES, 2, 3);
    let favorite_movies = MOVIES
        .iter()
        .filter(|(_, g)| movie_genres.iter().any(|m| m == g))
        .map(|(m, _)| m.to_string())
        .collect();
    let tv_genres = sample_names(&mut rng, TV_GENRES, 1, 3);
    let favorite_series = SERIES
        .iter()
        .filter(|(_, g)| tv_genres.iter().any(|t| t == g))
        .map(|(s, _)| s.to_string())
        .collect();
    let cuisines: Vec<String> = sample_names(&mut rng, CUISINES, 2, 4);
    let favorite_restaurants = RESTAURANTS
        .iter()
        .filter(|(_, c)| cuisines.iter().any(|k| k == c))
        .map(|(r, _)| r.to_string())
        .collect();
    let frequencies = {
        let d = EventRates::default();
        EventRates {
            music_per_day: jitter(&mut rng, d.music_per_day),
            movies_per_week: jitter(&mut rng, d.movies_per_week),
            episodes_per_week: jitter(&mut rng, d.episodes_per_week),
            purchases_per_week: jitter(&mut rng, d.purchases_per_week),
            workouts_per_week: jitter(&mut rng, d.workouts_per_week),
            meetings_per_week: jitter(&mut rng, d.meetings_per_week),
            doctor_per_year: jitter(&mut rng, d.doctor_per_year),
            trips_per_year: jitter(&mut rng, d.trips_per_year),
            songs_per_session: d.songs_per_session,
            music_during_workout: d.music_during_workout,
        }
    };
    let doctors = sample(&mut rng, SPECIALTIES, 2, 4)
        .into_iter()
        .map(|(specialty, _)| {
            let g = any_gender(&mut rng);
            let n = names.fresh(&mut rng, g, None);
            Doctor {
                name: format!("Dr. {n}"),
                specialty: specialty.to_string(),
            }
        })
        .collect();

    Persona {
        id: format!("p{seed}"),
        name,
        gender,
        birth_date,
        birth_city: birth_city.to_string(),
        mother,
        father,
        siblings,
        partner,
        wedding_date,
        kids,
        pets,
        friends,
        education,
        career,
        residences,
        music_genres,
        favorite_artists,
        movie_genres,
        favorite_movies,
        tv_genres,
        favorite_series,
        shopping_categories: sample_names(&mut rng, SHOPPING_CATEGORIES, 3, 5),
        travel_regions: sample_names(&mut rng, REGIONS, 2, 3),
        cuisines,
        favorite_restaurants,
        favorite_places: PLACES
            .iter()
            .map(|(p, _)| p.to_string())
            .collect::<Vec<_>>()
            .choose_multiple(&mut rng, 4)
            .cloned()
            .collect(),
        hobbies: sample_names(&mut rng, HOBBIES, 2, 4),
        workouts: sample_names(&mut rng, WORKOUT_TYPES, 2, 3),
        doctors,
        frequencies,
    }
}

impl Persona {
    /// Questionnaire fields as `(name, JSON text)`, id excluded.
    pub fn fields(&self) -> Vec<(String, String)> {
        let json = serde_json::to_value(self).expect("persona serializes");
        json.as_object()
            .expect("persona is an object")
            .iter()
            .filter(|(k, _)| k.as_str() != "id")
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect()
    }

    /// Residence at a date; the first one before any recorded move.
    pub fn residence_at(&self, date: NaiveDate) -> &Residence {
        self.residences
            .iter()
            .find(|r| r.start <= date && r.end.is_none_or(|e| date < e))
            .unwrap_or(&self.residences[0])
    }

    /// Family members and friends the persona meets.
    pub fn contacts(&self) -> Vec<String> {
        let mut out = vec![self.mother.clone(), self.father.clone()];
        out.extend(self.siblings.iter().cloned());
        out.extend(self.partner.iter().cloned());
        out.extend(self.kids.iter().map(|k| k.name.clone()));
        out.extend(self.friends.iter().cloned());
        out
    }

    /// `role: name` lines for value generators.
    pub fn user_info(&self) -> String {
        let mut lines = vec![
            format!("self: {}", self.name),
            format!("mother: {}", self.mother),
            format!("father: {}", self.father),
        ];
        lines.extend(self.siblings.iter().map(|s| format!("sibling: {s}")));
        lines.extend(self.partner.iter().map(|p| format!("partner: {p}")));
        lines.extend(self.kids.iter().map(|k| format!("child: {}", k.name)));
        lines.extend(self.friends.iter().map(|f| format!("friend: {f}")));
        lines.extend(self.doctors.iter().map(|d| format!("doctor: {}", d.name)));
        lines.join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_thirty_fields() {
        let a = generate_persona(1);
        assert_eq!(a, generate_persona(1));
        assert_eq!(a.fields().len(), 30);
        let b = generate_persona(2);
        let differing = a
            .fields()
            .iter()
            .zip(b.fields())
            .filter(|(x, y)| **x != *y)
            .count();
        assert!(differing >= 5, "{differing}");
    }

    #[test]
    fn constraints_hold_for_many_seeds() {
        for seed in 0..200 {
            let p = generate_persona(seed);
            for k in &p.kids {
                assert!(k.birth_date >= years_after(p.birth_date, 16), "seed {seed}");
            }
            for e in &p.education {
                assert!(e.start < e.end);
            }
            for j in &p.career {
                assert!(j.end.is_none_or(|e| j.start < e), "seed {seed}");
            }
            for r in &p.residences {
                assert!(r.end.is_none_or(|e| r.start <= e), "seed {seed}");
            }
            for pet in &p.pets {
                assert!(pet.end.is_none_or(|e| pet.start < e));
            }
            assert!(p.frequencies.is_valid());
            assert!(p.frequencies.music_per_day > 0.0);
            let contacts = p.contacts();
            let firsts: std::collections::BTreeSet<&str> = contacts
                .iter()
                .map(|c| c.split(' ').next().unwrap())
                .collect();
            assert_eq!(firsts.len(), contacts.len(), "seed {seed}");
        }
    }
}
