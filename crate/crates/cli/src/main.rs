//! `reqap`: ingest exports, generate personas, answer questions with
//! traceable plans, and run benchmarks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ClassifierMode, CliConfig, Clock, DecomposerMode, ExtractorMode, FileConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Exec(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Exec(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "reqap",
    version,
    about = "Question answering over personal event data with operator trees"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Event store (event lines, one JSON record per line).
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// scripted:<path> or external:<url>.
    #[arg(long, global = true)]
    decomposer: Option<DecomposerMode>,
    /// lexical, oracle[:<path>] or external:<url>.
    #[arg(long, global = true)]
    classifier: Option<ClassifierMode>,
    /// rules or external:<url>.
    #[arg(long, global = true)]
    extractor: Option<ExtractorMode>,
    /// Fixed "now" for relative dates: YYYY-MM-DD[THH:MM[:SS]], or `dataset`.
    #[arg(long, global = true)]
    clock: Option<Clock>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `role: name` lines about the user, read by value extraction.
    #[arg(long, global = true)]
    user_info: Option<PathBuf>,
    /// Disable merging of the same happening logged by several sources.
    #[arg(long, global = true)]
    no_dedup: bool,
    /// JSON config file; its values override flags.
    #[arg(long, global = true, env = "REQAP_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an event store from exports (event lines, .ics, .mbox).
    Ingest {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Format for all inputs; guessed from the extension otherwise.
        #[arg(long)]
        format: Option<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Generate synthetic personas with events and benchmark questions.
    Generate {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        personas: usize,
        /// First and last year, e.g. 2023..2024.
        #[arg(long, default_value = "2024..2024")]
        period: String,
        #[arg(long, default_value_t = 50)]
        questions: usize,
        /// Multiplies every event rate.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// structured, unstructured or mixed.
        #[arg(long, default_value = "mixed")]
        mode: String,
        /// Ask every persona questions from all templates instead of only
        /// its split's.
        #[arg(long)]
        all_templates: bool,
    },
    /// Run a plan file (`-` for stdin).
    Exec {
        plan: PathBuf,
        /// Print the executed nodes.
        #[arg(long)]
        trace: bool,
        /// Include per-node wall times in the trace (not reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Decompose a question into a plan and run it.
    Ask {
        question: String,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        timings: bool,
    },
    /// Score a generated dataset.
    Bench {
        dataset: PathBuf,
        /// train, dev, test or all.
        #[arg(long, default_value = "all")]
        split: String,
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one trace file per question into this directory.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Parse and validate a plan file.
    Check { plan: PathBuf },
    /// Answer questions read line by line.
    Repl,
}

fn resolve_config(g: &Global) -> Result<CliConfig, CliError> {
    let mut cfg = CliConfig {
        store: g.store.clone(),
        decomposer: g.decomposer.clone(),
        clock: g.clock,
        user_info: g.user_info.clone(),
        ..CliConfig::default()
    };
    if let Some(c) = &g.classifier {
        cfg.classifier = c.clone();
    }
    if let Some(e) = &g.extractor {
        cfg.extractor = e.clone();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.retrieval.dedup = !g.no_dedup;
    if let Some(path) = &g.config {
        cfg.overlay(FileConfig::load(path)?)?;
    }
    cfg.check()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli.global)?;
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Ingest {
            inputs,
            format,
            out: dest,
        } => commands::ingest(&inputs, format.as_deref(), &dest),
        Command::Generate {
            out: dest,
            personas,
            period,
            questions,
            scale,
            mode,
            all_templates,
        } => commands::generate(
            &cfg,
            &dest,
            commands::GenerateArgs {
                personas,
                period: &period,
                questions,
                scale,
                mode: &mode,
                all_templates,
            },
        ),
        Command::Exec {
            plan,
            trace,
            timings,
        } => commands::exec(&cfg, &plan, commands::Show { trace, timings }, &mut out),
        Command::Ask {
            question,
            trace,
            timings,
        } => commands::ask(&cfg, &question, commands::Show { trace, timings }, &mut out),
        Command::Bench {
            dataset,
            split,
            out: report,
            traces,
        } => commands::bench(
            &cfg,
            &dataset,
            &split,
            report.as_deref(),
            traces.as_deref(),
            &mut out,
        ),
        Command::Check { plan } => commands::check(&plan, &mut out),
        Command::Repl => commands::repl(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
