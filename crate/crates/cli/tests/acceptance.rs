//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Run with `cargo test -p evex-cli --test acceptance`. Criterion 7 needs the
//! BioNLP-ST 2016 BB data and word vectors: set `EVEX_BB_DIR` and
//! `EVEX_EMBEDDINGS` (plus `EVEX_EMBEDDINGS_FORMAT=text-word2vec` for text
//! files) to enable it.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use evex::corpus::{Corpus, TaskSchema};
use evex::embed::{EmbeddingTable, PAD_TOKEN};
use evex::evalkit::{binary_metrics, cross_validate, micro_curves, CrossValConfig, Level};
use evex::gradsuite::{run_suite, TOLERANCE};
use evex::pipeline::{event_sets, WindowIndex};
use evex::rng::seeded;
use evex::synth::{self, SynthConfig};
use evex::vecent::{build_context, oversample, Slot};
use evex::vecom::{decode_events, gen_candidates, label_pairs, PairLabel};
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn fixtures(task: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(task)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gradients() -> Check {
    let start = Instant::now();
    let mut worst = (String::new(), 0.0f64);
    for seed in 0..3 {
        for e in run_suite(seed).map_err(|e| e.to_string())? {
            ensure(e.checked > 0, || format!("{} checked nothing", e.name))?;
            if e.max_rel_error >= worst.1 {
                worst = (e.name.clone(), e.max_rel_error);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst.1 <= TOLERANCE, || format!("{} relative error {:e}", worst.0, worst.1))?;
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("worst relative error {:.2e} ({}), {secs:.1} s", worst.1, worst.0))
}

fn words(slots: &[Slot]) -> Vec<&str> {
    slots.iter().map(Slot::as_str).collect()
}

fn windows() -> Check {
    let c = Corpus::load_dir(&fixtures("bgi"), &TaskSchema::bacteria_gene_interactions()).map_err(|e| e.to_string())?;
    let d = c
        .documents
        .iter()
        .find(|d| d.document.id == "PMID-GERE-S1")
        .ok_or("GerE fixture missing")?;
    let table = EmbeddingTable::hashed(8, 0);
    let sent = &d.document.sentences[0];
    let cotb = build_context(sent, d.entity("T5").ok_or("T5")?, 3, &table).map_err(|e| e.to_string())?;
    let promoters = build_context(sent, d.entity("T4").ok_or("T4")?, 3, &table).map_err(|e| e.to_string())?;
    let expected = [
        (words(&cotb.right), vec![PAD_TOKEN, "cotC", "and", "cotB"]),
        (words(&cotb.left), vec!["the", "promoters", "for", "cotB"]),
        (words(&promoters.left), vec!["adheres", "to", "the", "promoters"]),
        (words(&promoters.right), vec!["and", "cotB", "for", "promoters"]),
    ];
    for (got, want) in &expected {
        ensure(got == want, || format!("got {got:?}, want {want:?}"))?;
    }
    ensure(cotb.right_vectors[0].iter().all(|&x| x == 0.0), || "pad slot is not a zero vector".into())?;
    Ok(format!("cotB right window {:?}", words(&cotb.right)))
}

fn round_trip_corpus(c: &Corpus) -> Result<(usize, usize), String> {
    let (mut events, mut mismatches) = (0, 0);
    for set in event_sets(c, false).map_err(|e| e.to_string())? {
        let preds: Vec<(f64, f64)> = set.labels.iter().map(|l| l.as_prediction()).collect();
        for (d, doc) in c.documents.iter().enumerate() {
            let idx: Vec<usize> = (0..set.pairs.len()).filter(|&i| set.pairs[i].doc == d).collect();
            let pairs: Vec<_> = idx.iter().map(|&i| set.pairs[i].clone()).collect();
            let p: Vec<_> = idx.iter().map(|&i| preds[i]).collect();
            let decoded: BTreeSet<_> = decode_events(&pairs, &p, &set.event_type, 0.5)
                .into_iter()
                .map(|e| (e.source, e.target))
                .collect();
            let gold: BTreeSet<_> = doc
                .intra_sentence_events()
                .filter(|e| e.event_type == set.event_type)
                .map(|e| (e.source.clone(), e.target.clone()))
                .collect();
            mismatches += decoded.symmetric_difference(&gold).count();
            events += gold.len();
        }
    }
    Ok((events, mismatches))
}

fn labels() -> Check {
    let bgi = Corpus::load_dir(&fixtures("bgi"), &TaskSchema::bacteria_gene_interactions()).map_err(|e| e.to_string())?;
    let bb = Corpus::load_dir(&fixtures("bb"), &TaskSchema::bacteria_biotopes()).map_err(|e| e.to_string())?;
    let (n_bgi, bad_bgi) = round_trip_corpus(&bgi)?;
    let (n_bb, bad_bb) = round_trip_corpus(&bb)?;
    ensure(bad_bgi + bad_bb == 0, || format!("{} discrepancies", bad_bgi + bad_bb))?;

    // the three events of the case-study sentence
    let d = bgi
        .documents
        .iter()
        .find(|d| d.document.id == "PMID-10629188-S5")
        .ok_or("case-study fixture missing")?;
    let pairs = gen_candidates(d, 0, 0);
    let mut decoded = BTreeSet::new();
    for ty in ["ActionTarget", "Interaction"] {
        let l = label_pairs(&pairs, &d.events, ty).map_err(|e| e.to_string())?;
        let p: Vec<_> = l.iter().map(|x| PairLabel::as_prediction(*x)).collect();
        decoded.extend(decode_events(&pairs, &p, ty, 0.5).into_iter().map(|e| (e.event_type, e.source, e.target)));
    }
    let want: BTreeSet<_> = [("ActionTarget", "T1", "T2"), ("Interaction", "T3", "T2"), ("Interaction", "T4", "T2")]
        .into_iter()
        .map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string()))
        .collect();
    ensure(decoded == want, || format!("case study decoded to {decoded:?}"))?;
    Ok(format!("{n_bgi} BGI and {n_bb} BB events, 0 discrepancies, case study 3/3"))
}

fn oversampling() -> Check {
    let mut rng = seeded(4);
    let mut grown = 0;
    for trial in 0..100 {
        let pos = rng.random_range(0..400usize);
        let neg = rng.random_range(0..400usize);
        let mut items: Vec<(usize, bool)> = (0..pos + neg).map(|i| (i, i < pos)).collect();
        // shuffle so positives are not a prefix
        for i in (1..items.len()).rev() {
            items.swap(i, rng.random_range(0..=i));
        }
        // evaluation portion: the last fifth, never passed to oversample
        let cut = items.len() * 4 / 5;
        let held = items[cut..].to_vec();
        let train = items[..cut].to_vec();
        let out = oversample(train.clone(), |x| x.1, 5.0, &mut seeded(trial));
        ensure(out[..train.len()] == train[..], || format!("trial {trial}: original order changed"))?;
        ensure(held == items[cut..], || format!("trial {trial}: evaluation portion changed"))?;
        let train_ids: BTreeSet<usize> = train.iter().map(|x| x.0).collect();
        ensure(out.iter().all(|x| train_ids.contains(&x.0)), || format!("trial {trial}: evaluation sample leaked"))?;
        let p = out.iter().filter(|x| x.1).count();
        let n = out.len() - p;
        let (tp, tn) = (train.iter().filter(|x| x.1).count(), train.iter().filter(|x| !x.1).count());
        if tp > 0 && tn > 0 {
            ensure(p.max(n) <= 5 * p.min(n), || format!("trial {trial}: {p}/{n} exceeds 5"))?;
            let needed = tp.max(tn).div_ceil(5).saturating_sub(tp.min(tn));
            ensure(out.len() == train.len() + needed, || format!("trial {trial}: more duplicates than needed"))?;
            grown += usize::from(needed > 0);
        } else {
            ensure(out.len() == train.len(), || format!("trial {trial}: single-class set changed"))?;
        }
    }
    Ok(format!("100 multisets, {grown} needed duplication"))
}

/// Width of the hashed vectors in the synthetic run.
const SYNTH_DIM: usize = 200;

fn synthetic() -> Check {
    let start = Instant::now();
    let docs = synth::generate(&SynthConfig::default());
    let corpus = synth::corpus(&docs).map_err(|e| e.to_string())?;
    let table = EmbeddingTable::hashed(SYNTH_DIM, 0);
    let cfg = CrossValConfig {
        evaluate_arguments: false,
        ..CrossValConfig::default()
    };
    let windows = WindowIndex::build(&corpus, &table, cfg.arg.window).map_err(|e| e.to_string())?;
    let result = cross_validate(&corpus, &windows, &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let class = result
        .report
        .classes
        .iter()
        .find(|c| c.level == Level::Event && c.class == "Interaction")
        .ok_or_else(|| format!("no event result; skipped {:?}", result.report.skipped))?;
    let f = class.metrics.f_score;
    let detail = format!("event F {f:.3} over {} folds, {secs:.0} s", class.folds);
    ensure(class.folds == 10, || format!("{detail}: expected 10 folds"))?;
    ensure(f >= 0.90, || detail.clone())?;
    ensure(secs <= 900.0, || format!("{detail}: over 15 minutes"))?;
    Ok(detail)
}

fn evex(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_evex"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let syn = dir.path().join("syn");
    synth::write_dir(&synth::generate(&SynthConfig { sentences: 80, ..SynthConfig::default() }), &syn)
        .map_err(|e| e.to_string())?;
    let schema = dir.path().join("syn.toml");
    std::fs::write(&schema, "name = \"SYN\"\n[events.Interaction]\nsource = \"Agent\"\ntarget = \"Target\"\n")
        .map_err(|e| e.to_string())?;
    let mut outs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let s = |p: &Path| p.to_string_lossy().into_owned();
        let args = [
            "crossval", "--seed", "11", "--schema", &s(&schema), "--corpus", &s(&syn), "--out", &s(&out),
            "--set", "embedding.dim=16", "--set", "argument.lstm_hidden=8", "--set", "argument.mlp_hidden=8",
            "--set", "argument.epochs=2", "--set", "event.mlp_hidden=8", "--set", "event.epochs=3",
        ];
        evex(&args)?;
        outs.push(out.join("crossval"));
    }
    let files = ["report.json", "report.csv", "roc_events.tsv", "prc_events.tsv", "roc_arguments.tsv", "prc_arguments.tsv"];
    for f in files {
        let a = std::fs::read(outs[0].join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(outs[1].join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(a == b, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} report files byte-identical across two runs", files.len()))
}

fn published_score() -> Outcome {
    let (Ok(bb), Ok(emb)) = (std::env::var("EVEX_BB_DIR"), std::env::var("EVEX_EMBEDDINGS")) else {
        return Outcome::Skip("EVEX_BB_DIR / EVEX_EMBEDDINGS not set; BB data and word vectors are not shipped".into());
    };
    let format = std::env::var("EVEX_EMBEDDINGS_FORMAT").unwrap_or_else(|_| "binary-word2vec".into());
    let run = || -> Check {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = dir.path().join("o");
        let fmt = format!("embedding.format=\"{format}\"");
        let out_s = out.to_string_lossy().into_owned();
        evex(&[
            "crossval", "--schema", "bb", "--corpus", &bb, "--embeddings", &emb, "--set", &fmt, "--out", &out_s,
            "--set", "crossval.evaluate_arguments=false",
        ])?;
        let text = std::fs::read_to_string(out.join("crossval/report.json")).map_err(|e| e.to_string())?;
        let report: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let f = report["classes"]
            .as_array()
            .and_then(|cs| cs.iter().find(|c| c["class"] == "Lives_In" && c["level"] == "event"))
            .and_then(|c| c["metrics"]["f_score"].as_f64())
            .ok_or("no Lives_In result in report")?;
        ensure(f >= 0.77, || format!("Lives_In F {f:.3} < 0.77"))?;
        Ok(format!("Lives_In F {f:.3}"))
    };
    match run() {
        Ok(m) => Outcome::Pass(m),
        Err(m) => Outcome::Fail(m),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

/// Area under the ROC curve as the probability that a random positive
/// outscores a random negative, ties counting half.
fn rank_auc(scored: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = scored.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scored.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            wins += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Threshold sweep: for every distinct score, count everything at or above it.
fn sweep(scored: &[(f64, bool)]) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let mut thresholds: Vec<f64> = scored.iter().map(|s| s.0).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let p = scored.iter().filter(|s| s.1).count() as f64;
    let n = scored.len() as f64 - p;
    let mut roc = vec![(0.0, 0.0)];
    let mut prc = Vec::new();
    for t in thresholds {
        let tp = scored.iter().filter(|s| s.0 >= t && s.1).count() as f64;
        let fp = scored.iter().filter(|s| s.0 >= t && !s.1).count() as f64;
        roc.push((fp / n, tp / p));
        prc.push((tp / p, tp / (tp + fp)));
    }
    prc.insert(0, (0.0, prc[0].1));
    (roc, prc)
}

fn area(points: &[(f64, f64)]) -> f64 {
    let mut a = 0.0;
    for i in 1..points.len() {
        a += (points[i].0 - points[i - 1].0) * (points[i].1 + points[i - 1].1) / 2.0;
    }
    a
}

fn metrics() -> Check {
    let mut rng = seeded(8);
    let mut curves_checked = 0;
    for set in 0..1000 {
        let len = rng.random_range(1..60);
        let gold: Vec<bool> = (0..len).map(|_| rng.random_bool(0.4)).collect();
        // coarse scores produce plenty of ties
        let levels = rng.random_range(2..12);
        let scores: Vec<f64> = (0..len).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let predicted: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();

        let m = binary_metrics(&gold, &predicted).map_err(|e| e.to_string())?;
        let count = |g: bool, p: bool| gold.iter().zip(&predicted).filter(|&(&a, &b)| a == g && b == p).count();
        let (tp, fp, fn_, tn) = (count(true, true), count(false, true), count(true, false), count(false, false));
        ensure((m.tp, m.fp, m.fn_, m.tn) == (tp, fp, fn_, tn), || format!("set {set}: confusion counts"))?;
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (pr, re) = (div(tp, tp + fp), div(tp, tp + fn_));
        let f = if pr + re > 0.0 { 2.0 * pr * re / (pr + re) } else { 0.0 };
        ensure(
            close(m.accuracy, div(tp + tn, len)) && close(m.precision, pr) && close(m.recall, re) && close(m.f_score, f),
            || format!("set {set}: derived scores"),
        )?;

        let scored: Vec<(f64, bool)> = scores.iter().copied().zip(gold.iter().copied()).collect();
        let single = gold.iter().all(|&g| g) || gold.iter().all(|&g| !g);
        match micro_curves(&scored) {
            Err(_) if single => continue,
            Err(e) => return Err(format!("set {set}: {e}")),
            Ok(_) if single => return Err(format!("set {set}: single-class set accepted")),
            Ok(c) => {
                let (roc, prc) = sweep(&scored);
                let same = |a: &[(f64, f64)], b: &[(f64, f64)]| {
                    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(x.0, y.0) && close(x.1, y.1))
                };
                ensure(same(&c.roc.points, &roc), || format!("set {set}: ROC points"))?;
                ensure(same(&c.prc.points, &prc), || format!("set {set}: PRC points"))?;
                ensure(close(c.roc.auc, rank_auc(&scored)), || format!("set {set}: ROC AUC {} vs {}", c.roc.auc, rank_auc(&scored)))?;
                ensure(close(c.prc.auc, area(&prc)), || format!("set {set}: PRC AUC"))?;
                curves_checked += 1;
            }
        }
    }
    Ok(format!("1000 sets, curves on {curves_checked}, tolerance 1e-12"))
}

fn main() {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("gradient correctness", Box::new(|| gradients().into())),
        ("window construction", Box::new(|| windows().into())),
        ("label/decode round trip", Box::new(|| labels().into())),
        ("oversampling bound", Box::new(|| oversampling().into())),
        ("synthetic end-to-end", Box::new(|| synthetic().into())),
        ("determinism", Box::new(|| determinism().into())),
        ("published BB score", Box::new(published_score)),
        ("metric sanity", Box::new(|| metrics().into())),
    ];
    let only: Option<usize> = std::env::var("EVEX_CRITERION").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let t = fmt_secs(start.elapsed());
        match outcome {
            Outcome::Pass(m) => println!("criterion {n} PASS  {name}: {m} [{t}]"),
            Outcome::Skip(m) => println!("criterion {n} SKIP  {name}: {m}"),
            Outcome::Fail(m) => {
                failed += 1;
                println!("criterion {n} FAIL  {name}: {m} [{t}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

impl From<Check> for Outcome {
    fn from(c: Check) -> Self {
        match c {
            Ok(m) => Outcome::Pass(m),
            Err(m) => Outcome::Fail(m),
        }
    }
}
