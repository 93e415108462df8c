use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use chrono::{NaiveDate, NaiveDateTime};
use serde::Deserialize;

use reqap_core::decompose::{Decomposer, GeneratorClient, ScriptedDecomposer};
use reqap_core::extract::{Extractor, HttpGenerator, RuleGenerator, ValueGenerator};
use reqap_core::retrieve::{HttpClassifier, OracleClassifier, Pipeline, RetrievalConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecomposerMode {
    Scripted(PathBuf),
    External(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassifierMode {
    Lexical,
    /// Gold labels from a file, or the dataset's own labels when benchmarking.
    Oracle(Option<PathBuf>),
    External(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractorMode {
    Rules,
    External(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    At(NaiveDateTime),
    /// The reference time a generated dataset was built with.
    Dataset,
}

fn split_mode(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((m, arg)) => (m, Some(arg)),
        None => (s, None),
    }
}

impl FromStr for DecomposerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match split_mode(s) {
            ("scripted", Some(p)) if !p.is_empty() => Ok(DecomposerMode::Scripted(p.into())),
            ("external", Some(u)) if !u.is_empty() => Ok(DecomposerMode::External(u.into())),
            _ => Err(format!(
                "decomposer `{s}`: expected scripted:<path> or external:<url>"
            )),
        }
    }
}

impl FromStr for ClassifierMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match split_mode(s) {
            ("lexical", None) => Ok(ClassifierMode::Lexical),
            ("oracle", None) => Ok(ClassifierMode::Oracle(None)),
            ("oracle", Some(p)) if !p.is_empty() => Ok(ClassifierMode::Oracle(Some(p.into()))),
            ("external", Some(u)) if !u.is_empty() => Ok(ClassifierMode::External(u.into())),
            _ => Err(format!(
                "classifier `{s}`: expected lexical, oracle[:<path>] or external:<url>"
            )),
        }
    }
}

impl FromStr for ExtractorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match split_mode(s) {
            ("rules", None) => Ok(ExtractorMode::Rules),
            ("external", Some(u)) if !u.is_empty() => Ok(ExtractorMode::External(u.into())),
            _ => Err(format!("extractor `{s}`: expected rules or external:<url>")),
        }
    }
}

impl FromStr for Clock {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "dataset" {
            return Ok(Clock::Dataset);
        }
        for fmt in [
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M",
        ] {
            if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
                return Ok(Clock::At(t));
            }
        }
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(|d| Clock::At(d.and_hms_opt(0, 0, 0).expect("midnight")))
            .map_err(|_| format!("clock `{s}`: expected YYYY-MM-DD[THH:MM[:SS]] or `dataset`"))
    }
}

/// Settings read from a config file. Every field is optional and, when
/// present, overrides the matching flag. Relative paths are taken from the
/// file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub store: Option<PathBuf>,
    pub decomposer: Option<String>,
    pub classifier: Option<String>,
    pub extractor: Option<String>,
    pub clock: Option<String>,
    pub seed: Option<u64>,
    pub user_info: Option<PathBuf>,
    pub score_threshold: Option<f64>,
    pub pattern_freq_threshold: Option<f64>,
    pub dedup: Option<bool>,
    pub max_depth: Option<usize>,
    pub timeout_secs: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.store.as_mut().map(rebase);
        cfg.user_info.as_mut().map(rebase);
        for m in [&mut cfg.decomposer, &mut cfg.classifier]
            .into_iter()
            .flatten()
        {
            if let Some((kind @ ("scripted" | "oracle"), p)) = m.split_once(':') {
                let p = Path::new(p);
                if p.is_relative() {
                    *m = format!("{kind}:{}", base.join(p).display());
                }
            }
        }
        Ok(cfg)
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub store: Option<PathBuf>,
    pub decomposer: Option<DecomposerMode>,
    pub classifier: ClassifierMode,
    pub extractor: ExtractorMode,
    pub clock: Option<Clock>,
    pub seed: u64,
    pub user_info: Option<PathBuf>,
    pub retrieval: RetrievalConfig,
    pub max_depth: usize,
    pub timeout: Duration,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            store: None,
            decomposer: None,
            classifier: ClassifierMode::Lexical,
            extractor: ExtractorMode::Rules,
            clock: None,
            seed: 1,
            user_info: None,
            retrieval: RetrievalConfig::default(),
            max_depth: reqap_core::decompose::DEFAULT_MAX_DEPTH,
            timeout: Duration::from_secs(30),
        }
    }
}

pub const RETRIES: usize = 2;

impl CliConfig {
    pub fn overlay(&mut self, file: FileConfig) -> Result<(), CliError> {
        let bad = CliError::Config;
        if let Some(p) = file.store {
            self.store = Some(p);
        }
        if let Some(m) = file.decomposer {
            self.decomposer = Some(m.parse().map_err(bad)?);
        }
        if let Some(m) = file.classifier {
            self.classifier = m.parse().map_err(bad)?;
        }
        if let Some(m) = file.extractor {
            self.extractor = m.parse().map_err(bad)?;
        }
        if let Some(c) = file.clock {
            self.clock = Some(c.parse().map_err(bad)?);
        }
        if let Some(s) = file.seed {
            self.seed = s;
        }
        if let Some(p) = file.user_info {
            self.user_info = Some(p);
        }
        if let Some(t) = file.score_threshold {
            self.retrieval.score_threshold = t;
        }
        if let Some(t) = file.pattern_freq_threshold {
            self.retrieval.pattern_freq_threshold = t;
        }
        if let Some(d) = file.dedup {
            self.retrieval.dedup = d;
        }
        if let Some(d) = file.max_depth {
            self.max_depth = d;
        }
        if let Some(t) = file.timeout_secs {
            self.timeout = Duration::from_secs(t);
        }
        Ok(())
    }

    pub fn check(&self) -> Result<(), CliError> {
        self.retrieval
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.max_depth == 0 {
            return Err(CliError::Config("max depth must be at least 1".into()));
        }
        Ok(())
    }

    pub fn decomposer(&self) -> Result<Option<Arc<dyn Decomposer>>, CliError> {
        Ok(match &self.decomposer {
            None => None,
            Some(DecomposerMode::Scripted(p)) => {
                Some(Arc::new(ScriptedDecomposer::load(p).map_err(|e| {
                    CliError::Config(format!("decomposer script {}: {e}", p.display()))
                })?))
            }
            Some(DecomposerMode::External(url)) => Some(Arc::new(GeneratorClient::new(
                url.clone(),
                self.timeout,
                RETRIES,
            ))),
        })
    }

    /// Pipeline for the configured classifier; `None` for a bare `oracle`,
    /// whose labels only a dataset can supply.
    pub fn pipeline(&self) -> Result<Option<Pipeline>, CliError> {
        Ok(match &self.classifier {
            ClassifierMode::Lexical => Some(Pipeline::lexical(self.retrieval)),
            ClassifierMode::Oracle(None) => None,
            ClassifierMode::Oracle(Some(p)) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read oracle {}: {e}", p.display()))
                })?;
                let oracle = OracleClassifier::parse(&text)
                    .map_err(|e| CliError::Config(format!("oracle {}: {e}", p.display())))?;
                Some(Pipeline::with_classifiers(self.retrieval, Arc::new(oracle)))
            }
            ClassifierMode::External(url) => Some(Pipeline::with_classifiers(
                self.retrieval,
                Arc::new(HttpClassifier::new(url.clone(), self.timeout, RETRIES)),
            )),
        })
    }

    pub fn generator(&self) -> Arc<dyn ValueGenerator> {
        match &self.extractor {
            ExtractorMode::Rules => Arc::new(RuleGenerator),
            ExtractorMode::External(url) => {
                Arc::new(HttpGenerator::new(url.clone(), self.timeout, RETRIES))
            }
        }
    }

    pub fn extractor(&self) -> Result<Extractor, CliError> {
        let user_info = match &self.user_info {
            Some(p) => std::fs::read_to_string(p).map_err(|e| {
                CliError::Config(format!("cannot read user info {}: {e}", p.display()))
            })?,
            None => String::new(),
        };
        Ok(Extractor {
            generator: self.generator(),
            user_info,
            ..Extractor::default()
        })
    }
}
