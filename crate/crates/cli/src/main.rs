mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evex::synth::{generate, write_dir, SynthConfig};

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Embedding(String),
    #[error(transparent)]
    Corpus(#[from] evex::corpus::CorpusError),
    #[error(transparent)]
    Train(#[from] evex::vecent::TrainError),
    #[error(transparent)]
    Pipeline(#[from] evex::pipeline::PipelineError),
    #[error(transparent)]
    Vecom(#[from] evex::vecom::VecomError),
    #[error(transparent)]
    Eval(#[from] evex::evalkit::EvalError),
    #[error(transparent)]
    Nd(#[from] evex::ndiff::NdError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Gradcheck(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Embedding(_) => "embedding",
            CliError::Corpus(_) => "corpus",
            CliError::Train(_) => "train",
            CliError::Pipeline(_) => "pipeline",
            CliError::Vecom(_) => "event",
            CliError::Eval(_) => "eval",
            CliError::Nd(_) => "numeric",
            CliError::Json(_) => "json",
            CliError::Gradcheck(_) => "gradcheck",
        }
    }
}

/// Relation extraction with entity-context argument embeddings.
#[derive(Debug, Parser)]
#[command(name = "evex", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `event.epochs=3`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Annotated corpus directory; repeat to concatenate.
    #[arg(long, global = true)]
    corpus: Vec<PathBuf>,
    /// `bgi`, `bb`, or a TOML schema file.
    #[arg(long, global = true)]
    schema: Option<String>,
    /// Word vectors; hashed vectors are used when absent.
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and align a corpus, write stats.json.
    Ingest,
    /// Train one argument model per argument type.
    TrainArgs,
    /// Train event models on top of saved argument models.
    TrainEvents,
    /// Extract events from unannotated documents.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Stratified k-fold cross-validation.
    Crossval,
    /// Finite-difference check of every operator and both losses.
    Gradcheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Write a generated corpus with planted patterns.
    Synth {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 500)]
        sentences: usize,
        #[arg(long = "synth-seed", default_value_t = 7)]
        synth_seed: u64,
    },
}

impl Cli {
    fn run_config(&self) -> Result<RunConfig, CliError> {
        let mut overrides = self.overrides.clone();
        let quote = |s: &str| toml::Value::String(s.to_string()).to_string();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(o) = &self.out {
            overrides.push(format!("out_dir={}", quote(&o.to_string_lossy())));
        }
        if let Some(j) = self.jobs {
            overrides.push(format!("jobs={j}"));
        }
        if !self.corpus.is_empty() {
            let list: Vec<String> = self.corpus.iter().map(|p| quote(&p.to_string_lossy())).collect();
            overrides.push(format!("task.corpus=[{}]", list.join(",")));
        }
        if let Some(s) = &self.schema {
            overrides.push(format!("task.schema={}", quote(s)));
        }
        if let Some(e) = &self.embeddings {
            overrides.push(format!("embedding.path={}", quote(&e.to_string_lossy())));
        }
        if let Command::Predict { threshold: Some(t), .. } = &self.command {
            overrides.push(format!("event.threshold={t}"));
        }
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

fn run(cli: &Cli) -> Result<serde_json::Value, CliError> {
    if let Command::Synth { dir, sentences, synth_seed } = &cli.command {
        let docs = generate(&SynthConfig {
            sentences: *sentences,
            seed: *synth_seed,
            ..SynthConfig::default()
        });
        write_dir(&docs, dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        return Ok(serde_json::json!({ "documents": docs.len(), "dir": dir }));
    }
    if let Command::Gradcheck { seed } = &cli.command {
        let entries = commands::gradcheck(*seed)?;
        return Ok(serde_json::to_value(entries)?);
    }
    let cfg = cli.run_config()?;
    if cfg.jobs > 0 {
        // only fails if a pool already exists, in which case it is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global();
    }
    commands::save_effective_config(&cfg)?;
    match &cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::TrainArgs => commands::train_args(&cfg),
        Command::TrainEvents => commands::train_events(&cfg),
        Command::Predict { input, .. } => commands::predict_dir(&cfg, input),
        Command::Crossval => commands::crossval(&cfg),
        Command::Gradcheck { .. } | Command::Synth { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
