//! Cross-validation planning, binary metrics and micro-averaged curves.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::pipeline::{
    argument_samples, doc_ranges, event_sets, pair_entities, score_pairs, train_argument_models,
    train_event_set, EmbeddingCache, EntityKey, EventSet, PipelineError, WindowIndex,
};
use crate::rng::derived;
use crate::vecent::{train_argument_model, ArgHyper};
use crate::vecom::{decode_events, EventHyper};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("fold planning: {0}")]
    Plan(String),
    #[error("length mismatch: {0} gold vs {1} predicted")]
    Length(usize, usize),
    #[error("curves need both classes ({positives} positives of {total})")]
    SingleClass { positives: usize, total: usize },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How many folds to use for a given number of positives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldRule {
    pub default_k: usize,
    pub small_k: usize,
    pub small_threshold: usize,
}

impl Default for FoldRule {
    fn default() -> Self {
        FoldRule {
            default_k: 10,
            small_k: 5,
            small_threshold: 20,
        }
    }
}

impl FoldRule {
    pub fn k_for(&self, positives: usize) -> usize {
        if positives < self.small_threshold {
            self.small_k
        } else {
            self.default_k
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold of each sample.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

/// Stratified assignment: positives and negatives are shuffled separately
/// and dealt round-robin, so every fold receives at least one of each.
pub fn plan_folds(labels: &[bool], rule: &FoldRule, seed: u64) -> Result<FoldPlan, EvalError> {
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i]);
    let k = rule.k_for(pos.len());
    if k < 2 {
        return Err(EvalError::Plan(format!("fold count {k} is below 2")));
    }
    if pos.len() < k || neg.len() < k {
        return Err(EvalError::Plan(format!(
            "{} positives and {} negatives cannot fill {} folds",
            pos.len(),
            neg.len(),
            k
        )));
    }
    let mut rng = derived(seed, "folds", 0);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut assignments = vec![0; labels.len()];
    for (j, &i) in pos.iter().enumerate() {
        assignments[i] = j % k;
    }
    // continue dealing where the positives stopped to even out fold sizes
    for (j, &i) in neg.iter().enumerate() {
        assignments[i] = (pos.len() + j) % k;
    }
    Ok(FoldPlan { k, assignments, seed })
}

/// Confusion counts and the scores derived from them. A score whose
/// denominator is zero is reported as 0 and listed in `undefined`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub undefined: Vec<String>,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let mut undefined = Vec::new();
        let mut ratio = |num: usize, den: usize, name: &str| {
            if den == 0 {
                undefined.push(name.to_string());
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let accuracy = ratio(tp + tn, tp + fp + fn_ + tn, "accuracy");
        let precision = ratio(tp, tp + fp, "precision");
        let recall = ratio(tp, tp + fn_, "recall");
        let f_score = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            undefined.push("f_score".into());
            0.0
        };
        Metrics {
            tp,
            fp,
            fn_,
            tn,
            accuracy,
            precision,
            recall,
            f_score,
            undefined,
        }
    }

    pub fn support(&self) -> (usize, usize) {
        (self.tp + self.fn_, self.fp + self.tn)
    }
}

pub fn binary_metrics(gold: &[bool], predicted: &[bool]) -> Result<Metrics, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::Length(gold.len(), predicted.len()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&g, &p) in gold.iter().zip(predicted) {
        match (g, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveData {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    /// `(false positive rate, true positive rate)`
    pub roc: CurveData,
    /// `(recall, precision)`
    pub prc: CurveData,
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// ROC and precision-recall curves of pooled `(score, label)` pairs.
///
/// The threshold sweeps the distinct scores from high to low; tied scores
/// move together. ROC starts at (0, 0); PRC starts at recall 0 with the
/// precision of the first step. Areas use the trapezoid rule.
pub fn micro_curves(scored: &[(f64, bool)]) -> Result<Curves, EvalError> {
    let positives = scored.iter().filter(|s| s.1).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass {
            positives,
            total: scored.len(),
        });
    }
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (p, n) = (positives as f64, negatives as f64);
    let mut roc = vec![(0.0, 0.0)];
    let mut prc = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0.total_cmp(&s).is_eq() {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        roc.push((fp as f64 / n, tp as f64 / p));
        prc.push((tp as f64 / p, tp as f64 / (tp + fp) as f64));
    }
    prc.insert(0, (0.0, prc[0].1));
    Ok(Curves {
        roc: CurveData {
            auc: trapezoid(&roc),
            points: roc,
        },
        prc: CurveData {
            auc: trapezoid(&prc),
            points: prc,
        },
    })
}

/// TSV with a header row naming the two axes.
pub fn curve_tsv(curve: &CurveData, x: &str, y: &str) -> String {
    let mut s = format!("{x}\t{y}\n");
    for (a, b) in &curve.points {
        s.push_str(&format!("{a}\t{b}\n"));
    }
    s
}

/// What a fold holds out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitUnit {
    /// Individual samples: entities, or unordered entity pairs for events.
    #[default]
    Sample,
    /// Whole documents.
    Document,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValConfig {
    pub arg: ArgHyper,
    pub event: EventHyper,
    pub threshold: f64,
    pub typed_candidates: bool,
    pub folds: FoldRule,
    pub split: SplitUnit,
    pub evaluate_arguments: bool,
    pub seed: u64,
}

impl Default for CrossValConfig {
    fn default() -> Self {
        CrossValConfig {
            arg: ArgHyper::default(),
            event: EventHyper::default(),
            threshold: 0.5,
            typed_candidates: false,
            folds: FoldRule::default(),
            split: SplitUnit::Sample,
            evaluate_arguments: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Argument,
    Event,
}

impl Level {
    fn as_str(self) -> &'static str {
        match self {
            Level::Argument => "argument",
            Level::Event => "event",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub level: Level,
    pub class: String,
    pub folds: usize,
    pub metrics: Metrics,
    pub roc_auc: Option<f64>,
    pub prc_auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub level: Level,
    pub class: String,
    pub reason: String,
}

/// Deterministic part of a cross-validation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport {
    pub task: String,
    pub seed: u64,
    pub classes: Vec<ClassReport>,
    pub skipped: Vec<Skipped>,
    /// Mean F-score over the evaluated event types.
    pub event_average_f: Option<f64>,
    pub argument_average_f: Option<f64>,
    pub event_roc_auc: Option<f64>,
    pub event_prc_auc: Option<f64>,
    pub argument_roc_auc: Option<f64>,
    pub argument_prc_auc: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassTiming {
    pub train_seconds: f64,
    pub test_seconds: f64,
}

/// Wall-clock times, kept apart from the report so that reports of
/// identical runs compare equal byte for byte.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossValTiming {
    pub total_seconds: f64,
    pub classes: BTreeMap<String, ClassTiming>,
}

pub struct CrossValResult {
    pub report: CrossValReport,
    pub timing: CrossValTiming,
    pub event_curves: Option<Curves>,
    pub argument_curves: Option<Curves>,
}

/// Pooled test-set outcomes of one class.
struct Outcome {
    folds: usize,
    gold: Vec<bool>,
    predicted: Vec<bool>,
    scores: Vec<f64>,
    timing: ClassTiming,
}

fn units_for_pairs(set: &EventSet, split: SplitUnit) -> (Vec<usize>, Vec<bool>) {
    let mut ids: BTreeMap<(usize, usize, &str, &str), usize> = BTreeMap::new();
    let mut unit_of = Vec::with_capacity(set.pairs.len());
    for p in &set.pairs {
        let key = match split {
            SplitUnit::Sample => {
                let (a, b) = if p.first <= p.second {
                    (p.first.as_str(), p.second.as_str())
                } else {
                    (p.second.as_str(), p.first.as_str())
                };
                (p.doc, p.sentence, a, b)
            }
            SplitUnit::Document => (p.doc, 0, "", ""),
        };
        let next = ids.len();
        unit_of.push(*ids.entry(key).or_insert(next));
    }
    let mut labels = vec![false; ids.len()];
    for (u, l) in unit_of.iter().zip(&set.labels) {
        labels[*u] |= l.exists;
    }
    (unit_of, labels)
}

/// Pairs and entities of one event-level fold.
#[derive(Clone, Debug, PartialEq)]
pub struct EventFold {
    pub fold: usize,
    pub test: Vec<usize>,
    pub train: Vec<usize>,
    /// Entities of test pairs; argument models of this fold never see them.
    pub held_out: BTreeSet<EntityKey>,
}

/// Splits the pairs of `set` into folds. Both orderings of an entity pair
/// (or every pair of a document) land in the same fold.
pub fn plan_event_folds(set: &EventSet, cfg: &CrossValConfig) -> Result<Vec<EventFold>, EvalError> {
    let (unit_of, unit_labels) = units_for_pairs(set, cfg.split);
    let plan = plan_folds(&unit_labels, &cfg.folds, crate::rng::derive_seed(cfg.seed, &set.event_type, 0))?;
    Ok((0..plan.k)
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..set.pairs.len()).partition(|&i| plan.assignments[unit_of[i]] == fold);
            let held_out = pair_entities(test.iter().map(|&i| &set.pairs[i])).into_iter().collect();
            EventFold {
                fold,
                test,
                train,
                held_out,
            }
        })
        .collect())
}

fn event_fold(
    corpus: &Corpus,
    windows: &WindowIndex,
    set: &EventSet,
    split: &EventFold,
    cfg: &CrossValConfig,
) -> Result<(Vec<bool>, Vec<f64>, ClassTiming), PipelineError> {
    let (test, train, fold) = (&split.test[..], &split.train[..], split.fold);
    let start = Instant::now();
    let include = |d: usize, id: &str| !split.held_out.contains(&(d, id.to_string()));
    let types: Vec<String> = [set.roles.source.clone(), set.roles.target.clone()]
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let tag = format!("cv/{}/{}", set.event_type, fold);
    let args = train_argument_models(corpus, windows, &types, &cfg.arg, cfg.seed, &tag, &include)?;
    let models = args.into_iter().map(|(t, a)| (t, a.model)).collect();
    let keys = pair_entities(train.iter().chain(test).map(|&i| &set.pairs[i]));
    let cache = EmbeddingCache::build(&models, windows, &keys)?;
    let trained = train_event_set(set, train, &cache, &cfg.event, cfg.seed, &tag)?;
    let train_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let probs = score_pairs(&trained.model, set, test, &cache)?;
    let test_pairs: Vec<_> = test.iter().map(|&i| set.pairs[i].clone()).collect();
    let mut decoded = HashSet::new();
    for (_, range) in doc_ranges(&test_pairs) {
        let doc = test_pairs[range.start].doc;
        for e in decode_events(&test_pairs[range.clone()], &probs[range], &set.event_type, cfg.threshold) {
            decoded.insert((doc, e.source, e.target));
        }
    }
    let predicted = test_pairs
        .iter()
        .map(|p| decoded.contains(&(p.doc, p.first.clone(), p.second.clone())))
        .collect();
    let scores = probs.iter().map(|(e, f)| e * f).collect();
    let timing = ClassTiming {
        train_seconds,
        test_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((predicted, scores, timing))
}

/// Cross-validates one event type. Folds hold out unordered pairs (or whole
/// documents); argument models are retrained per fold without any entity that
/// occurs in a held-out pair, then frozen while the event model trains.
fn cross_validate_event(
    corpus: &Corpus,
    windows: &WindowIndex,
    set: &EventSet,
    cfg: &CrossValConfig,
) -> Result<Outcome, EvalError> {
    let splits = plan_event_folds(set, cfg)?;
    let folds = splits
        .par_iter()
        .map(|split| {
            let (pred, scores, timing) = event_fold(corpus, windows, set, split, cfg)?;
            Ok((split.test.clone(), pred, scores, timing))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let mut out = Outcome {
        folds: splits.len(),
        gold: Vec::new(),
        predicted: Vec::new(),
        scores: Vec::new(),
        timing: ClassTiming::default(),
    };
    for (test, pred, scores, t) in folds {
        out.gold.extend(test.iter().map(|&i| set.labels[i].forward));
        out.predicted.extend(pred);
        out.scores.extend(scores);
        out.timing.train_seconds += t.train_seconds;
        out.timing.test_seconds += t.test_seconds;
    }
    Ok(out)
}

fn cross_validate_argument(
    corpus: &Corpus,
    windows: &WindowIndex,
    arg_type: &str,
    cfg: &CrossValConfig,
) -> Result<Outcome, EvalError> {
    let samples = argument_samples(corpus, windows, arg_type, &|_, _| true);
    let mut unit_ids: BTreeMap<EntityKey, usize> = BTreeMap::new();
    let unit_of: Vec<usize> = samples
        .iter()
        .map(|s| {
            let key = match cfg.split {
                SplitUnit::Sample => s.entity.clone(),
                SplitUnit::Document => (s.entity.0, String::new()),
            };
            let next = unit_ids.len();
            *unit_ids.entry(key).or_insert(next)
        })
        .collect();
    let mut unit_labels = vec![false; unit_ids.len()];
    for (u, s) in unit_of.iter().zip(&samples) {
        unit_labels[*u] |= s.label;
    }
    let plan = plan_folds(&unit_labels, &cfg.folds, crate::rng::derive_seed(cfg.seed, arg_type, 1))?;
    let folds = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let start = Instant::now();
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..samples.len()).partition(|&i| plan.assignments[unit_of[i]] == f);
            let train_set: Vec<_> = train.iter().map(|&i| samples[i].clone()).collect();
            let mut rng = derived(cfg.seed, &format!("cv-args/{arg_type}/{f}"), 0);
            let trained = train_argument_model(arg_type, &train_set, &cfg.arg, &mut rng)
                .map_err(PipelineError::from)?;
            let train_seconds = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let ws: Vec<_> = test.iter().map(|&i| &*samples[i].window).collect();
            let probs = trained.model.predict(&ws).map_err(PipelineError::from)?;
            let timing = ClassTiming {
                train_seconds,
                test_seconds: start.elapsed().as_secs_f64(),
            };
            Ok((test, probs, timing))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let mut out = Outcome {
        folds: plan.k,
        gold: Vec::new(),
        predicted: Vec::new(),
        scores: Vec::new(),
        timing: ClassTiming::default(),
    };
    for (test, probs, t) in folds {
        out.gold.extend(test.iter().map(|&i| samples[i].label));
        out.predicted.extend(probs.iter().map(|&p| p >= 0.5));
        out.scores.extend(probs);
        out.timing.train_seconds += t.train_seconds;
        out.timing.test_seconds += t.test_seconds;
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Runs event-level (and optionally argument-level) cross-validation for
/// every type of the corpus schema. Types that cannot be planned or trained
/// are listed under `skipped`.
pub fn cross_validate(
    corpus: &Corpus,
    windows: &WindowIndex,
    cfg: &CrossValConfig,
) -> Result<CrossValResult, EvalError> {
    let start = Instant::now();
    let mut classes = Vec::new();
    let mut skipped = Vec::new();
    let mut timing = CrossValTiming::default();
    let mut pooled: BTreeMap<Level, Vec<(f64, bool)>> = BTreeMap::new();

    let mut jobs: Vec<(Level, String)> = Vec::new();
    if cfg.evaluate_arguments {
        jobs.extend(corpus.schema.argument_types().into_iter().map(|a| (Level::Argument, a)));
    }
    let sets = event_sets(corpus, cfg.typed_candidates).map_err(PipelineError::from)?;
    jobs.extend(sets.iter().map(|s| (Level::Event, s.event_type.clone())));

    for (level, class) in jobs {
        log::info!("cross-validating {} {}", level.as_str(), class);
        let outcome = match level {
            Level::Argument => cross_validate_argument(corpus, windows, &class, cfg),
            Level::Event => {
                let set = sets.iter().find(|s| s.event_type == class).expect("set per type");
                cross_validate_event(corpus, windows, set, cfg)
            }
        };
        let outcome = match outcome {
            Ok(o) => o,
            Err(e @ (EvalError::Plan(_) | EvalError::Pipeline(_))) => {
                log::warn!("skipping {} {}: {}", level.as_str(), class, e);
                skipped.push(Skipped {
                    level,
                    class,
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let metrics = binary_metrics(&outcome.gold, &outcome.predicted)?;
        let scored: Vec<(f64, bool)> = outcome.scores.iter().copied().zip(outcome.gold.iter().copied()).collect();
        let curves = micro_curves(&scored).ok();
        pooled.entry(level).or_default().extend(scored);
        timing.classes.insert(format!("{}/{}", level.as_str(), class), outcome.timing);
        classes.push(ClassReport {
            level,
            class,
            folds: outcome.folds,
            metrics,
            roc_auc: curves.as_ref().map(|c| c.roc.auc),
            prc_auc: curves.as_ref().map(|c| c.prc.auc),
        });
    }

    let average = |level: Level| {
        mean(&classes.iter().filter(|c| c.level == level).map(|c| c.metrics.f_score).collect::<Vec<_>>())
    };
    let curves = |level: Level| pooled.get(&level).and_then(|s| micro_curves(s).ok());
    let event_curves = curves(Level::Event);
    let argument_curves = curves(Level::Argument);
    timing.total_seconds = start.elapsed().as_secs_f64();
    let report = CrossValReport {
        task: corpus.schema.name.clone(),
        seed: cfg.seed,
        event_average_f: average(Level::Event),
        argument_average_f: average(Level::Argument),
        event_roc_auc: event_curves.as_ref().map(|c| c.roc.auc),
        event_prc_auc: event_curves.as_ref().map(|c| c.prc.auc),
        argument_roc_auc: argument_curves.as_ref().map(|c| c.roc.auc),
        argument_prc_auc: argument_curves.as_ref().map(|c| c.prc.auc),
        classes,
        skipped,
    };
    Ok(CrossValResult {
        report,
        timing,
        event_curves,
        argument_curves,
    })
}

/// CSV with one row per evaluated class.
pub fn report_csv(report: &CrossValReport) -> String {
    let mut s = String::from("level,class,folds,accuracy,precision,recall,f_score,tp,fp,fn,tn\n");
    for c in &report.classes {
        let m = &c.metrics;
        s.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{},{},{},{}\n",
            c.level.as_str(),
            c.class,
            c.folds,
            m.accuracy,
            m.precision,
            m.recall,
            m.f_score,
            m.tp,
            m.fp,
            m.fn_,
            m.tn
        ));
    }
    s
}

/// Writes `report.json`, `report.csv`, curve TSVs and the `timing.json`
/// sidecar into `dir`.
pub fn write_reports(dir: &Path, result: &CrossValResult) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&result.report)? + "\n")?;
    std::fs::write(dir.join("report.csv"), report_csv(&result.report))?;
    for (name, curves) in [("events", &result.event_curves), ("arguments", &result.argument_curves)] {
        if let Some(c) = curves {
            std::fs::write(dir.join(format!("roc_{name}.tsv")), curve_tsv(&c.roc, "fpr", "tpr"))?;
            std::fs::write(dir.join(format!("prc_{name}.tsv")), curve_tsv(&c.prc, "recall", "precision"))?;
        }
    }
    std::fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&result.timing)? + "\n")?;
    Ok(())
}
