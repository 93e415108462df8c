//! Multi-persona datasets: generation, on-disk layout and loading.
//!
//! Layout of a dataset directory:
//!
//! ```text
//! config.json             generator config, rates included
//! splits.json             persona and template splits
//! <pid>/persona.json
//! <pid>/events.jsonl      observable events, one record per line
//! <pid>/canonical.jsonl   canonical events
//! <pid>/links.tsv         observable id, canonical id
//! <pid>/questions.jsonl   question instances with gold answers
//! <pid>/decompositions.tsv  question, plan
//! <pid>/oracle.tsv        query, relevant event ids (every query wording)
//! <pid>/user_info.txt     role: name lines for extraction
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::canonical::{generate_canonical_events, CanonicalEvent, Period};
use super::gold::{all_queries, GoldIndex};
use super::profile::{generate_persona, EventRates, Persona};
use super::questions::{instantiate_questions, QuestionInstance, Template, TEMPLATES};
use super::verbalize::{verbalize_all, Observable, VerbalizeConfig, VerbalizeMode};
use super::PersonaError;
use crate::decompose::ScriptedDecomposer;
use crate::event::EventId;
use crate::exec::ExecContext;
use crate::extract::Extractor;
use crate::retrieve::{OracleClassifier, Pipeline, PipelineBackend, RetrievalConfig};
use crate::store::EventStore;

/// Which event classifiers an engine built from a dataset uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierChoice {
    /// Gold relevance for every query the persona's questions issue.
    Oracle,
    Lexical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub personas: usize,
    pub period: Period,
    /// Overrides each persona's own frequencies when set.
    pub rates: Option<EventRates>,
    /// Multiplies whichever rates apply.
    pub rate_scale: f64,
    pub mode: VerbalizeMode,
    pub verbalize: VerbalizeConfig,
    pub questions_per_persona: usize,
    /// Ask each persona only its split's templates. When off, every persona
    /// draws from all templates and splits only filter at scoring time.
    pub questions_follow_splits: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 1,
            personas: 2,
            period: Period::years(2024, 2024),
            rates: None,
            rate_scale: 1.0,
            mode: VerbalizeMode::Mixed,
            verbalize: VerbalizeConfig::default(),
            questions_per_persona: 50,
            questions_follow_splits: true,
        }
    }
}

impl GeneratorConfig {
    pub fn persona_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_mul(1000).wrapping_add(i as u64 + 1)
    }

    pub fn rates_for(&self, persona: &Persona) -> EventRates {
        self.rates
            .clone()
            .unwrap_or_else(|| persona.frequencies.clone())
            .scaled(self.rate_scale)
    }
}

/// Everything generated for one persona.
#[derive(Debug, Clone)]
pub struct PersonaData {
    pub persona: Persona,
    pub canonical: Vec<CanonicalEvent>,
    pub observables: Vec<Observable>,
    pub questions: Vec<QuestionInstance>,
}

impl PersonaData {
    pub fn generate(
        persona: Persona,
        cfg: &GeneratorConfig,
        seed: u64,
        templates: &[Template],
    ) -> Result<Self, PersonaError> {
        let rates = cfg.rates_for(&persona);
        let canonical = generate_canonical_events(&persona, cfg.period, &rates, seed)?;
        let observables = verbalize_all(&canonical, &persona, cfg.mode, &cfg.verbalize, seed);
        let questions = instantiate_questions(
            templates,
            &persona,
            &canonical,
            cfg.period,
            cfg.questions_per_persona,
            seed,
        )?;
        Ok(PersonaData {
            persona,
            canonical,
            observables,
            questions,
        })
    }

    pub fn store(&self) -> Result<EventStore, PersonaError> {
        EventStore::from_vec(self.observables.iter().map(|o| o.event.clone()).collect())
            .map_err(|e| PersonaError::BadRecord(e.to_string()))
    }

    pub fn gold_index(&self) -> GoldIndex {
        GoldIndex::new(&self.observables)
    }

    /// Oracle classifier for every query this persona's questions issue.
    pub fn oracle(&self) -> OracleClassifier {
        let queries: BTreeSet<&str> = self
            .questions
            .iter()
            .flat_map(|q| q.queries.iter().map(String::as_str))
            .collect();
        self.gold_index().oracle(queries, &self.canonical)
    }

    /// Oracle classifier for every kind- and attribute-level query.
    pub fn full_oracle(&self) -> OracleClassifier {
        let queries = all_queries(&self.canonical);
        self.gold_index()
            .oracle(queries.iter().map(String::as_str), &self.canonical)
    }

    /// Scripted decomposer mapping each question to its resolved plan.
    pub fn decomposer(&self) -> ScriptedDecomposer {
        ScriptedDecomposer::from_pairs(
            self.questions
                .iter()
                .map(|q| (q.question.as_str(), q.plan.clone())),
        )
    }

    /// Engine over this persona's observable events with the scripted
    /// question-to-plan decompositions.
    pub fn engine(
        &self,
        classifiers: ClassifierChoice,
        cfg: RetrievalConfig,
        now: chrono::NaiveDateTime,
    ) -> Result<ExecContext, PersonaError> {
        let pipeline = match classifiers {
            ClassifierChoice::Oracle => Pipeline::with_classifiers(cfg, Arc::new(self.oracle())),
            ClassifierChoice::Lexical => Pipeline::lexical(cfg),
        };
        let backend = PipelineBackend::new(Arc::new(self.store()?), pipeline);
        let mut ctx = ExecContext::new(now, Arc::new(backend));
        ctx.extractor = Arc::new(Extractor {
            user_info: self.persona.user_info(),
            ..Extractor::default()
        });
        ctx.decomposer = Some(Arc::new(self.decomposer()));
        Ok(ctx)
    }

    fn write(&self, dir: &Path) -> Result<(), PersonaError> {
        fs::create_dir_all(dir)?;
        let persona = serde_json::to_string_pretty(&self.persona)
            .map_err(|e| PersonaError::BadRecord(e.to_string()))?;
        fs::write(dir.join("persona.json"), persona)?;
        self.store()?
            .dump(std::io::BufWriter::new(fs::File::create(
                dir.join("events.jsonl"),
            )?))?;
        write_lines(
            &dir.join("canonical.jsonl"),
            self.canonical.iter().map(CanonicalEvent::to_json_line),
        )?;
        write_lines(
            &dir.join("links.tsv"),
            self.observables
                .iter()
                .map(|o| format!("{}\t{}", o.event.id(), o.canonical)),
        )?;
        write_lines(
            &dir.join("questions.jsonl"),
            self.questions.iter().map(QuestionInstance::to_json_line),
        )?;
        fs::write(
            dir.join("decompositions.tsv"),
            self.decomposer().to_script(),
        )?;
        fs::write(dir.join("oracle.tsv"), self.full_oracle().to_tsv())?;
        fs::write(dir.join("user_info.txt"), self.persona.user_info())?;
        Ok(())
    }

    fn read(dir: &Path) -> Result<Self, PersonaError> {
        let persona: Persona = serde_json::from_str(&fs::read_to_string(dir.join("persona.json"))?)
            .map_err(|e| PersonaError::BadRecord(e.to_string()))?;
        let store = EventStore::load_path(dir.join("events.jsonl"))
            .map_err(|e| PersonaError::BadRecord(e.to_string()))?;
        let canonical = read_lines(&dir.join("canonical.jsonl"))?
            .iter()
            .map(|l| CanonicalEvent::from_json_line(l))
            .collect::<Result<Vec<_>, _>>()?;
        let mut links: BTreeMap<EventId, EventId> = BTreeMap::new();
        for line in read_lines(&dir.join("links.tsv"))? {
            let (obs, canon) = line
                .split_once('\t')
                .ok_or_else(|| PersonaError::BadRecord(format!("bad link line `{line}`")))?;
            links.insert(EventId::new(obs), EventId::new(canon));
        }
        let observables = store
            .events()
            .iter()
            .map(|e| {
                let canonical = links.get(e.id()).cloned().ok_or_else(|| {
                    PersonaError::BadRecord(format!("event {} has no link", e.id()))
                })?;
                Ok(Observable {
                    event: e.clone(),
                    canonical,
                })
            })
            .collect::<Result<Vec<_>, PersonaError>>()?;
        let questions = read_lines(&dir.join("questions.jsonl"))?
            .iter()
            .map(|l| QuestionInstance::from_json_line(l))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PersonaData {
            persona,
            canonical,
            observables,
            questions,
        })
    }
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<(), PersonaError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for line in lines {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>, PersonaError> {
    Ok(fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];
}

impl std::str::FromStr for SplitName {
    type Err = PersonaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "dev" => Ok(SplitName::Dev),
            "test" => Ok(SplitName::Test),
            other => Err(PersonaError::BadRecord(format!("unknown split `{other}`"))),
        }
    }
}

/// Persona and template sets per split. Both dimensions are partitioned,
/// so no persona and no template is shared between two splits, and each
/// persona is only asked questions from its own split's templates.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Splits {
    pub personas: BTreeMap<SplitName, Vec<String>>,
    pub templates: BTreeMap<SplitName, Vec<String>>,
}

fn partition(mut items: Vec<String>, rng: &mut ChaCha8Rng) -> BTreeMap<SplitName, Vec<String>> {
    items.shuffle(rng);
    let n = items.len();
    let (train, dev) = match n {
        0 => (0, 0),
        1 => (1, 0),
        2 => (1, 0),
        _ => {
            let dev = (n / 5).max(1);
            let test = dev;
            (n - dev - test, dev)
        }
    };
    let mut out = BTreeMap::new();
    let mut rest = items.into_iter();
    let mut take = |k: usize| {
        let mut v: Vec<String> = rest.by_ref().take(k).collect();
        v.sort();
        v
    };
    out.insert(SplitName::Train, take(train));
    out.insert(SplitName::Dev, take(dev));
    out.insert(SplitName::Test, take(usize::MAX));
    out
}

impl Splits {
    /// Roughly 60/20/20 along both dimensions.
    pub fn assign(personas: &[String], templates: &[String], seed: u64) -> Self {
        Self::assign_stratified(personas, &[templates.to_vec()], seed)
    }

    /// As [`Splits::assign`], with each template group partitioned on its
    /// own so every split gets a share of every group.
    pub fn assign_stratified(
        personas: &[String],
        template_groups: &[Vec<String>],
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0073_706c_6974);
        let personas = partition(personas.to_vec(), &mut rng);
        let mut templates: BTreeMap<SplitName, Vec<String>> = BTreeMap::new();
        for group in template_groups {
            for (split, ids) in partition(group.clone(), &mut rng) {
                templates.entry(split).or_default().extend(ids);
            }
        }
        for ids in templates.values_mut() {
            ids.sort();
        }
        Splits {
            personas,
            templates,
        }
    }

    pub fn split_of_persona(&self, persona: &str) -> Option<SplitName> {
        self.personas
            .iter()
            .find(|(_, v)| v.iter().any(|p| p == persona))
            .map(|(k, _)| *k)
    }

    pub fn has_template(&self, split: SplitName, template: &str) -> bool {
        self.templates
            .get(&split)
            .is_some_and(|v| v.iter().any(|t| t == template))
    }

    pub fn contains(&self, split: SplitName, q: &QuestionInstance) -> bool {
        let has = |m: &BTreeMap<SplitName, Vec<String>>, x: &str| {
            m.get(&split).is_some_and(|v| v.iter().any(|y| y == x))
        };
        has(&self.personas, &q.persona) && has(&self.templates, &q.template)
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub config: GeneratorConfig,
    pub splits: Splits,
    pub personas: Vec<PersonaData>,
}

impl Dataset {
    /// Personas are generated independently and in parallel.
    pub fn generate(cfg: &GeneratorConfig) -> Result<Self, PersonaError> {
        Self::generate_with(cfg, TEMPLATES)
    }

    pub fn generate_with(
        cfg: &GeneratorConfig,
        templates: &[Template],
    ) -> Result<Self, PersonaError> {
        let profiles: Vec<(u64, Persona)> = (0..cfg.personas)
            .map(|i| {
                let seed = cfg.persona_seed(i);
                (seed, generate_persona(seed))
            })
            .collect();
        let ids: Vec<String> = profiles.iter().map(|(_, p)| p.id.clone()).collect();
        // templates without slots yield one question each, so they are
        // spread over the splits separately from the ones with slots
        let (open, fixed): (Vec<&Template>, Vec<&Template>) =
            templates.iter().partition(|t| !t.slots().is_empty());
        let tid = |ts: Vec<&Template>| ts.iter().map(|t| t.id.to_string()).collect::<Vec<_>>();
        let splits = Splits::assign_stratified(&ids, &[tid(open), tid(fixed)], cfg.seed);
        let personas = profiles
            .into_par_iter()
            .map(|(seed, persona)| {
                let split = splits
                    .split_of_persona(&persona.id)
                    .filter(|_| cfg.questions_follow_splits);
                let own: Vec<Template> = match split {
                    Some(split) => templates
                        .iter()
                        .filter(|t| splits.has_template(split, t.id))
                        .cloned()
                        .collect(),
                    None => templates.to_vec(),
                };
                PersonaData::generate(persona, cfg, seed, &own)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset {
            config: cfg.clone(),
            splits,
            personas,
        })
    }

    pub fn questions(&self) -> impl Iterator<Item = (&PersonaData, &QuestionInstance)> {
        self.personas
            .iter()
            .flat_map(|p| p.questions.iter().map(move |q| (p, q)))
    }

    pub fn persona(&self, id: &str) -> Option<&PersonaData> {
        self.personas.iter().find(|p| p.persona.id == id)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(), PersonaError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let json =
            |v: serde_json::Result<String>| v.map_err(|e| PersonaError::BadRecord(e.to_string()));
        fs::write(
            dir.join("config.json"),
            json(serde_json::to_string_pretty(&self.config))?,
        )?;
        fs::write(
            dir.join("splits.json"),
            json(serde_json::to_string_pretty(&self.splits))?,
        )?;
        for p in &self.personas {
            p.write(&dir.join(&p.persona.id))?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, PersonaError> {
        let dir = dir.as_ref();
        let bad = |e: serde_json::Error| PersonaError::BadRecord(e.to_string());
        let config: GeneratorConfig =
            serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?).map_err(bad)?;
        let splits: Splits = match fs::read_to_string(dir.join("splits.json")) {
            Ok(text) => serde_json::from_str(&text).map_err(bad)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Splits::default(),
            Err(e) => return Err(e.into()),
        };
        let mut dirs: Vec<_> = fs::read_dir(dir)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.join("persona.json").is_file())
            .collect();
        dirs.sort();
        let personas = dirs
            .iter()
            .map(|d| PersonaData::read(d))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset {
            config,
            splits,
            personas,
        })
    }
}
