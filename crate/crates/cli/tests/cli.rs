use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures(task: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(task)
}

fn evex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evex")).args(args).output().expect("binary runs")
}

fn error_kind(out: &Output) -> String {
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("json error on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

const SMALL: &[&str] = &[
    "--set", "embedding.dim=8",
    "--set", "argument.lstm_hidden=4",
    "--set", "argument.mlp_hidden=4",
    "--set", "argument.epochs=2",
    "--set", "event.mlp_hidden=4",
    "--set", "event.epochs=2",
];

#[test]
fn ingest_writes_stats_and_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let corpus = fixtures("bgi");
    let o = evex(&["ingest", "--schema", "bgi", "--corpus", corpus.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stats: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["documents"], 3);
    assert_eq!(stats["events"]["Interaction"], 6);
    let cfg = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(cfg.contains("schema = \"bgi\""));
}

#[test]
fn train_and_predict_on_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let corpus = fixtures("bb");
    let mut base = vec!["--schema", "bb", "--corpus", corpus.to_str().unwrap(), "--out", out.to_str().unwrap()];
    base.extend_from_slice(SMALL);
    for cmd in ["train-args", "train-events"] {
        let mut a = vec![cmd];
        a.extend_from_slice(&base);
        let o = evex(&a);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(out.join("models/args/Bacteria.ckpt").exists());
    assert!(out.join("models/events/Lives_In.ckpt").exists());
    assert!(out.join("logs/args_Location.csv").exists());

    let mut a = vec!["predict", "--input", corpus.to_str().unwrap()];
    a.extend_from_slice(&base);
    let o = evex(&a);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for id in ["BB-train-0001", "BB-train-0004"] {
        assert!(out.join(format!("predictions/{id}.a2")).exists());
    }
    let tsv = std::fs::read_to_string(out.join("predictions/pair_scores.tsv")).unwrap();
    assert!(tsv.starts_with("document\tsentence\tevent_type"));
    assert!(tsv.lines().count() > 1);

    // word vectors of another width cannot feed the saved models
    let mut a = vec!["predict", "--input", corpus.to_str().unwrap()];
    a.extend_from_slice(&base);
    a.extend_from_slice(&["--set", "embedding.dim=9"]);
    assert_eq!(error_kind(&evex(&a)), "config");
}

#[test]
fn failures_are_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = evex(&["train-events", "--schema", "bb", "--corpus", fixtures("bb").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(error_kind(&o), "config");
    let o = evex(&["ingest", "--schema", "bb", "--corpus", dir.path().join("missing").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(error_kind(&o), "corpus");
    let o = evex(&["ingest", "--set", "argument.dropout=2", "--out", out.to_str().unwrap()]);
    assert_eq!(error_kind(&o), "config");
}

#[test]
fn synth_then_crossval_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let syn = dir.path().join("syn");
    let schema = dir.path().join("syn.toml");
    std::fs::write(&schema, "name = \"SYN\"\n[events.Interaction]\nsource = \"Agent\"\ntarget = \"Target\"\n").unwrap();
    assert!(evex(&["synth", "--dir", syn.to_str().unwrap(), "--sentences", "60"]).status.success());
    let out = dir.path().join("o");
    let mut a = vec!["crossval", "--schema", schema.to_str().unwrap(), "--corpus", syn.to_str().unwrap(), "--out", out.to_str().unwrap()];
    a.extend_from_slice(SMALL);
    a.extend_from_slice(&["--set", "crossval.evaluate_arguments=false"]);
    let o = evex(&a);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "report.csv", "roc_events.tsv", "prc_events.tsv", "timing.json"] {
        assert!(out.join("crossval").join(f).exists(), "{f}");
    }
}

#[test]
fn gradcheck_passes() {
    let o = evex(&["gradcheck"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 18);
}
