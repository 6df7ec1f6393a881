//! Run configuration: a TOML file with flat tables, defaults for every key,
//! and `section.key=value` overrides from the command line.

use std::path::{Path, PathBuf};

use evex::corpus::TaskSchema;
use evex::embed::{OovPolicy, TableFormat};
use evex::evalkit::{CrossValConfig, FoldRule, SplitUnit};
use evex::vecent::ArgHyper;
use evex::vecom::EventHyper;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub task: TaskConfig,
    pub embedding: EmbeddingConfig,
    pub argument: ArgumentConfig,
    pub event: EventConfig,
    pub crossval: CrossvalConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    /// `bgi`, `bb`, or a path to a TOML schema file.
    pub schema: String,
    pub corpus: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// Pre-trained vectors; when empty, every word gets a hashed vector.
    pub path: Option<PathBuf>,
    pub format: TableFormat,
    /// `zero` or `hashed`.
    pub oov: String,
    /// Width of hashed vectors when no table is given.
    pub dim: usize,
    pub hash_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArgumentConfig {
    pub window: usize,
    pub lstm_hidden: usize,
    pub mlp_hidden: usize,
    pub batch: usize,
    pub epochs: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub oversample_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventConfig {
    pub mlp_hidden: usize,
    pub batch: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub oversample_ratio: f64,
    pub threshold: f64,
    /// Keep only pairs whose entity labels match the event's two roles.
    pub typed_candidates: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossvalConfig {
    pub default_k: usize,
    pub small_k: usize,
    pub small_threshold: usize,
    pub split: SplitUnit,
    pub evaluate_arguments: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: PathBuf::from("evex-out"),
            jobs: 0,
            task: TaskConfig::default(),
            embedding: EmbeddingConfig::default(),
            argument: ArgumentConfig::default(),
            event: EventConfig::default(),
            crossval: CrossvalConfig::default(),
        }
    }
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            schema: "bb".into(),
            corpus: Vec::new(),
        }
    }
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            path: None,
            format: TableFormat::TextWord2vec,
            oov: "hashed".into(),
            dim: 200,
            hash_seed: 0,
        }
    }
}

impl Default for ArgumentConfig {
    fn default() -> Self {
        let h = ArgHyper::default();
        ArgumentConfig {
            window: h.window,
            lstm_hidden: h.lstm_hidden,
            mlp_hidden: h.mlp_hidden,
            batch: h.batch,
            epochs: h.epochs,
            dropout: h.dropout,
            learning_rate: h.learning_rate,
            momentum: h.momentum,
            oversample_ratio: h.oversample_ratio,
        }
    }
}

impl Default for EventConfig {
    fn default() -> Self {
        let h = EventHyper::default();
        EventConfig {
            mlp_hidden: h.mlp_hidden,
            batch: h.batch,
            epochs: h.epochs,
            learning_rate: h.learning_rate,
            momentum: h.momentum,
            oversample_ratio: h.oversample_ratio,
            threshold: 0.5,
            typed_candidates: false,
        }
    }
}

impl Default for CrossvalConfig {
    fn default() -> Self {
        let r = FoldRule::default();
        CrossvalConfig {
            default_k: r.default_k,
            small_k: r.small_k,
            small_threshold: r.small_threshold,
            split: SplitUnit::Sample,
            evaluate_arguments: true,
        }
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    // reuse the TOML grammar for numbers, booleans, arrays and quoted strings
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

impl RunConfig {
    /// Reads `path` (if any), then applies `key=value` overrides where `key`
    /// is `name` or `section.name`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override {o:?} is not key=value")))?;
            let mut parts: Vec<&str> = key.trim().split('.').collect();
            let leaf = parts.pop().unwrap_or_default();
            let mut t = &mut table;
            for p in parts {
                t = t
                    .entry(p)
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| CliError::Config(format!("{p} is not a section")))?;
            }
            t.insert(leaf.to_string(), parse_scalar(raw.trim()));
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let a = &self.argument;
        let e = &self.event;
        let c = &self.crossval;
        if a.window == 0 || a.lstm_hidden == 0 || a.mlp_hidden == 0 || a.batch == 0 {
            return bad("argument window, hidden sizes and batch must be positive");
        }
        if e.mlp_hidden == 0 || e.batch == 0 {
            return bad("event hidden size and batch must be positive");
        }
        if !(0.0..1.0).contains(&a.dropout) {
            return bad("argument dropout must lie in [0, 1)");
        }
        for (lr, m) in [(a.learning_rate, a.momentum), (e.learning_rate, e.momentum)] {
            if lr <= 0.0 || !lr.is_finite() || !(0.0..1.0).contains(&m) {
                return bad("learning rates must be positive and momentum in [0, 1)");
            }
        }
        if a.oversample_ratio < 1.0 || e.oversample_ratio < 1.0 {
            return bad("oversample ratios must be at least 1");
        }
        if !e.threshold.is_finite() {
            return bad("threshold must be finite");
        }
        if c.small_k < 2 || c.default_k < 2 {
            return bad("fold counts must be at least 2");
        }
        if self.embedding.path.is_none() && self.embedding.dim == 0 {
            return bad("embedding dim must be positive");
        }
        self.oov_policy()?;
        Ok(())
    }

    pub fn schema(&self) -> Result<TaskSchema, CliError> {
        if let Some(s) = TaskSchema::builtin(&self.task.schema) {
            return Ok(s);
        }
        let text = std::fs::read_to_string(&self.task.schema)
            .map_err(|e| CliError::Config(format!("schema {}: {e}", self.task.schema)))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("schema {}: {e}", self.task.schema)))
    }

    pub fn oov_policy(&self) -> Result<OovPolicy, CliError> {
        match self.embedding.oov.as_str() {
            "zero" => Ok(OovPolicy::Zero),
            "hashed" => Ok(OovPolicy::Hashed {
                seed: self.embedding.hash_seed,
            }),
            other => Err(CliError::Config(format!("unknown oov policy {other:?}"))),
        }
    }

    pub fn arg_hyper(&self) -> ArgHyper {
        let a = &self.argument;
        ArgHyper {
            window: a.window,
            lstm_hidden: a.lstm_hidden,
            mlp_hidden: a.mlp_hidden,
            batch: a.batch,
            epochs: a.epochs,
            dropout: a.dropout,
            learning_rate: a.learning_rate,
            momentum: a.momentum,
            oversample_ratio: a.oversample_ratio,
        }
    }

    pub fn event_hyper(&self) -> EventHyper {
        let e = &self.event;
        EventHyper {
            mlp_hidden: e.mlp_hidden,
            batch: e.batch,
            epochs: e.epochs,
            learning_rate: e.learning_rate,
            momentum: e.momentum,
            oversample_ratio: e.oversample_ratio,
        }
    }

    pub fn crossval(&self) -> CrossValConfig {
        let c = &self.crossval;
        CrossValConfig {
            arg: self.arg_hyper(),
            event: self.event_hyper(),
            threshold: self.event.threshold,
            typed_candidates: self.event.typed_candidates,
            folds: FoldRule {
                default_k: c.default_k,
                small_k: c.small_k,
                small_threshold: c.small_threshold,
            },
            split: c.split,
            evaluate_arguments: c.evaluate_arguments,
            seed: self.seed,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
