//! Seeded synthetic personas, their event timelines, observable
//! renderings and benchmark questions with oracle answers.

pub mod canonical;
pub mod dataset;
pub mod gold;
pub mod pools;
pub mod profile;
pub mod questions;
pub mod verbalize;

use chrono::NaiveDate;

pub use canonical::{generate_canonical_events, CanonicalEvent, EventKind, Period};
pub use dataset::{ClassifierChoice, Dataset, GeneratorConfig, PersonaData, SplitName, Splits};
pub use gold::{all_queries, gold_table, CanonicalBackend, GoldIndex, GoldTable, Selector};
pub use profile::{generate_persona, reference_date, EventRates, Persona};
pub use questions::{instantiate_questions, QuestionInstance, Tag, Template, TEMPLATES};
pub use verbalize::{verbalize, verbalize_all, Observable, VerbalizeConfig, VerbalizeMode};

#[derive(Debug, thiserror::Error)]
pub enum PersonaError {
    #[error("period {start}..{end} is shorter than a year")]
    PeriodTooShort { start: NaiveDate, end: NaiveDate },
    #[error("event rates must be finite and non-negative")]
    BadRates,
    #[error("unknown event kind `{0}`")]
    UnknownKind(String),
    #[error("unknown verbalization mode `{0}`")]
    UnknownMode(String),
    #[error("no valid slot filling for template `{0}`")]
    NoValidFilling(String),
    #[error("template `{template}`: {message}")]
    BadTemplate { template: String, message: String },
    #[error("bad record: {0}")]
    BadRecord(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
