use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use evex::corpus::{write_standoff, Corpus, TaskSchema};
use evex::embed::{load_table_file, EmbeddingTable};
use evex::evalkit::{cross_validate, write_reports};
use evex::gradsuite::{run_suite, SuiteEntry};
use evex::ndiff::{read_params, write_params};
use evex::pipeline::{
    argument_samples, event_sets, pair_entities, pair_scores_tsv, predict, train_argument_models, train_event_set,
    EmbeddingCache, WindowIndex,
};
use evex::vecent::{epoch_log_csv, ArgumentModel};
use evex::vecom::EventModel;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArgumentEntry {
    pub file: PathBuf,
    pub dropout: f64,
    pub class_weight: f64,
    pub samples: usize,
    pub trained_on: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventEntry {
    pub file: PathBuf,
    pub source: String,
    pub target: String,
    pub pairs: usize,
    pub trained_on: usize,
}

/// Index of the checkpoints under `<out>/models`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub task: String,
    pub seed: u64,
    pub window: usize,
    pub embedding_dim: usize,
    pub arguments: BTreeMap<String, ArgumentEntry>,
    pub skipped_arguments: BTreeMap<String, String>,
    pub events: BTreeMap<String, EventEntry>,
    pub skipped_events: BTreeMap<String, String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write(path, serde_json::to_string_pretty(value)? + "\n")
}

fn write_timing(cfg: &RunConfig, command: &str, start: Instant) -> Result<(), CliError> {
    let t = serde_json::json!({ "command": command, "seconds": start.elapsed().as_secs_f64() });
    write_json(&cfg.out_dir.join("logs").join(format!("timing-{command}.json")), &t)
}

fn manifest_path(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join("models").join("manifest.json")
}

fn read_manifest(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let p = manifest_path(cfg);
    let text = std::fs::read_to_string(&p)
        .map_err(|e| CliError::Config(format!("no trained models at {} ({e}); run train-args first", p.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes the resolved configuration next to the outputs.
pub fn save_effective_config(cfg: &RunConfig) -> Result<(), CliError> {
    write(&cfg.out_dir.join("config.toml"), cfg.to_toml())
}

pub fn load_corpus(dirs: &[PathBuf], schema: &TaskSchema) -> Result<Corpus, CliError> {
    if dirs.is_empty() {
        return Err(CliError::Config("no corpus directory given (task.corpus or --corpus)".into()));
    }
    let mut documents = Vec::new();
    for d in dirs {
        documents.extend(Corpus::load_dir(d, schema)?.documents);
    }
    let corpus = Corpus::new(schema.clone(), documents);
    corpus.check_alignment()?;
    Ok(corpus)
}

pub fn load_table(cfg: &RunConfig) -> Result<EmbeddingTable, CliError> {
    let oov = cfg.oov_policy()?;
    match &cfg.embedding.path {
        Some(p) => load_table_file(p, cfg.embedding.format, oov).map_err(|e| CliError::Embedding(format!("{}: {e}", p.display()))),
        None => Ok(EmbeddingTable::hashed(cfg.embedding.dim, cfg.embedding.hash_seed)),
    }
}

pub fn ingest(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let schema = cfg.schema()?;
    let corpus = load_corpus(&cfg.task.corpus, &schema)?;
    let stats = corpus.stats();
    write_json(&cfg.out_dir.join("stats.json"), &stats)?;
    Ok(serde_json::to_value(stats)?)
}

pub fn train_args(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let start = Instant::now();
    let schema = cfg.schema()?;
    let corpus = load_corpus(&cfg.task.corpus, &schema)?;
    let table = load_table(cfg)?;
    let windows = WindowIndex::build(&corpus, &table, cfg.argument.window)?;
    let all = |_: usize, _: &str| true;

    let mut manifest = Manifest {
        task: schema.name.clone(),
        seed: cfg.seed,
        window: cfg.argument.window,
        embedding_dim: table.dim(),
        ..Manifest::default()
    };
    let mut types = Vec::new();
    let mut sizes = BTreeMap::new();
    for t in schema.argument_types() {
        let samples = argument_samples(&corpus, &windows, &t, &all);
        let pos = samples.iter().filter(|s| s.label).count();
        if pos == 0 || pos == samples.len() {
            log::warn!("argument {t}: {pos} positives of {}, not trained", samples.len());
            manifest
                .skipped_arguments
                .insert(t, format!("{pos} positives of {} samples", samples.len()));
        } else {
            sizes.insert(t.clone(), samples.len());
            types.push(t);
        }
    }
    let trained = train_argument_models(&corpus, &windows, &types, &cfg.arg_hyper(), cfg.seed, "train", &all)?;
    let models_dir = cfg.out_dir.join("models");
    for (t, tr) in &trained {
        let file = PathBuf::from("args").join(format!("{t}.ckpt"));
        let mut buf = Vec::new();
        write_params(&tr.model.params, &mut buf)?;
        write(&models_dir.join(&file), buf)?;
        write(&cfg.out_dir.join("logs").join(format!("args_{t}.csv")), epoch_log_csv(&tr.log))?;
        manifest.arguments.insert(
            t.clone(),
            ArgumentEntry {
                file,
                dropout: tr.model.shape.dropout,
                class_weight: tr.class_weight,
                samples: sizes[t],
                trained_on: tr.trained_on,
            },
        );
    }
    write_json(&manifest_path(cfg), &manifest)?;
    write_timing(cfg, "train-args", start)?;
    Ok(serde_json::json!({
        "arguments": manifest.arguments.keys().collect::<Vec<_>>(),
        "skipped": manifest.skipped_arguments,
    }))
}

fn load_arg_models(cfg: &RunConfig, manifest: &Manifest) -> Result<BTreeMap<String, ArgumentModel>, CliError> {
    let dir = cfg.out_dir.join("models");
    manifest
        .arguments
        .iter()
        .map(|(t, e)| {
            let p = dir.join(&e.file);
            let f = std::fs::File::open(&p).map_err(|err| CliError::Config(format!("argument checkpoint {}: {err}", p.display())))?;
            let params = read_params(std::io::BufReader::new(f))?;
            Ok((t.clone(), ArgumentModel::from_params(t, e.dropout, params)?))
        })
        .collect()
}

fn load_event_models(cfg: &RunConfig, manifest: &Manifest) -> Result<BTreeMap<String, EventModel>, CliError> {
    let dir = cfg.out_dir.join("models");
    manifest
        .events
        .iter()
        .map(|(t, e)| {
            let p = dir.join(&e.file);
            let f = std::fs::File::open(&p).map_err(|err| CliError::Config(format!("event checkpoint {}: {err}", p.display())))?;
            let params = read_params(std::io::BufReader::new(f))?;
            Ok((t.clone(), EventModel::from_params(t, &e.source, &e.target, params)?))
        })
        .collect()
}

fn check_table(manifest: &Manifest, table: &EmbeddingTable) -> Result<(), CliError> {
    if manifest.embedding_dim != table.dim() {
        return Err(CliError::Config(format!(
            "models were trained on {}-dimensional word vectors, the table has {}",
            manifest.embedding_dim,
            table.dim()
        )));
    }
    Ok(())
}

pub fn train_events(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    use rayon::prelude::*;

    let start = Instant::now();
    let schema = cfg.schema()?;
    let mut manifest = read_manifest(cfg)?;
    let corpus = load_corpus(&cfg.task.corpus, &schema)?;
    let table = load_table(cfg)?;
    check_table(&manifest, &table)?;
    let arg_models = load_arg_models(cfg, &manifest)?;
    let windows = WindowIndex::build(&corpus, &table, manifest.window)?;
    let sets = event_sets(&corpus, cfg.event.typed_candidates)?;

    let mut trainable = Vec::new();
    manifest.events.clear();
    manifest.skipped_events.clear();
    for set in &sets {
        let positives = set.labels.iter().filter(|l| l.exists).count();
        if positives == 0 || positives == set.labels.len() {
            log::warn!("event {}: {positives} positive pairs of {}, not trained", set.event_type, set.labels.len());
            manifest
                .skipped_events
                .insert(set.event_type.clone(), format!("{positives} positive pairs of {}", set.labels.len()));
            continue;
        }
        for role in [&set.roles.source, &set.roles.target] {
            if !arg_models.contains_key(role) {
                return Err(CliError::Config(format!(
                    "event {} needs the {role} argument model, which has no checkpoint",
                    set.event_type
                )));
            }
        }
        trainable.push(set);
    }
    let keys = pair_entities(trainable.iter().flat_map(|s| s.pairs.iter()));
    let cache = EmbeddingCache::build(&arg_models, &windows, &keys)?;
    let hyper = cfg.event_hyper();
    let trained = trainable
        .par_iter()
        .map(|set| {
            let all: Vec<usize> = (0..set.pairs.len()).collect();
            Ok((*set, train_event_set(set, &all, &cache, &hyper, cfg.seed, "train")?))
        })
        .collect::<Result<Vec<_>, evex::pipeline::PipelineError>>()?;
    let models_dir = cfg.out_dir.join("models");
    for (set, tr) in trained {
        let t = &set.event_type;
        let file = PathBuf::from("events").join(format!("{t}.ckpt"));
        let mut buf = Vec::new();
        write_params(&tr.model.params, &mut buf)?;
        write(&models_dir.join(&file), buf)?;
        write(&cfg.out_dir.join("logs").join(format!("events_{t}.csv")), epoch_log_csv(&tr.log))?;
        manifest.events.insert(
            t.clone(),
            EventEntry {
                file,
                source: set.roles.source.clone(),
                target: set.roles.target.clone(),
                pairs: set.pairs.len(),
                trained_on: tr.trained_on,
            },
        );
    }
    write_json(&manifest_path(cfg), &manifest)?;
    write_timing(cfg, "train-events", start)?;
    Ok(serde_json::json!({
        "events": manifest.events.keys().collect::<Vec<_>>(),
        "skipped": manifest.skipped_events,
    }))
}

pub fn predict_dir(cfg: &RunConfig, input: &Path) -> Result<serde_json::Value, CliError> {
    let start = Instant::now();
    let schema = cfg.schema()?;
    let manifest = read_manifest(cfg)?;
    if manifest.events.is_empty() {
        return Err(CliError::Config("no event models; run train-events first".into()));
    }
    let corpus = load_corpus(&[input.to_path_buf()], &schema)?;
    let table = load_table(cfg)?;
    check_table(&manifest, &table)?;
    let arg_models = load_arg_models(cfg, &manifest)?;
    let event_models = load_event_models(cfg, &manifest)?;
    let windows = WindowIndex::build(&corpus, &table, manifest.window)?;
    let pred = predict(
        &corpus,
        &windows,
        &arg_models,
        &event_models,
        cfg.event.threshold,
        cfg.event.typed_candidates,
    )?;
    let dir = cfg.out_dir.join("predictions");
    let mut total = 0;
    for (doc, events) in corpus.documents.iter().zip(&pred.events) {
        total += events.len();
        write(&dir.join(format!("{}.a2", doc.document.id)), write_standoff(events, &schema)?)?;
    }
    write(&dir.join("pair_scores.tsv"), pair_scores_tsv(&pred.scores))?;
    write_timing(cfg, "predict", start)?;
    Ok(serde_json::json!({ "documents": corpus.documents.len(), "events": total }))
}

pub fn crossval(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let schema = cfg.schema()?;
    let corpus = load_corpus(&cfg.task.corpus, &schema)?;
    let table = load_table(cfg)?;
    let windows = WindowIndex::build(&corpus, &table, cfg.argument.window)?;
    let result = cross_validate(&corpus, &windows, &cfg.crossval())?;
    write_reports(&cfg.out_dir.join("crossval"), &result)?;
    Ok(serde_json::json!({
        "event_average_f": result.report.event_average_f,
        "argument_average_f": result.report.argument_average_f,
        "classes": result.report.classes.iter().map(|c| serde_json::json!({
            "level": c.level,
            "class": c.class,
            "f_score": c.metrics.f_score,
        })).collect::<Vec<_>>(),
        "skipped": result.report.skipped.len(),
    }))
}

pub fn gradcheck(seed: u64) -> Result<Vec<SuiteEntry>, CliError> {
    let entries = run_suite(seed)?;
    if let Some(bad) = entries.iter().find(|e| !e.passed()) {
        return Err(CliError::Gradcheck(format!(
            "{} has relative error {:e}",
            bad.name, bad.max_rel_error
        )));
    }
    Ok(entries)
}
