//! Runs the `revcon` binary end to end on a synthetic corpus and checks exit codes.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use revcon::corpus::{write_jsonl, write_snapshot};
use serde_json::Value;

fn revcon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revcon")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
    snapshot: PathBuf,
    jsonl: PathBuf,
}

fn workspace() -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let mut corpus = common::synthetic_corpus(3, 24);
    let lonely = common::review(
        "LONE",
        "LONE-R0",
        vec![("The proof is rigorous.".into(), common::labels(&[(revcon::corpus::AspectCategory::Soundness, Some(revcon::corpus::Sentiment::Positive))]))],
    );
    corpus.papers.insert("LONE".into(), common::paper("LONE", vec![lonely]));
    let snapshot = root.join("corpus.json");
    write_snapshot(&corpus, &snapshot).unwrap();
    let jsonl = root.join("corpus.jsonl");
    let mut buf = Vec::new();
    write_jsonl(&corpus, &mut buf).unwrap();
    std::fs::write(&jsonl, buf).unwrap();
    Workspace { _dir: dir, root, snapshot, jsonl }
}

const SMALL_ASPECT: &str = r#"{"epochs": 2, "embedding_dim": 8, "hidden_dim": 8, "attention_dim": 4, "acsa_hidden_dim": 4, "acsa_layers": 1, "word_hidden_dim": 4, "learning_rate": 0.01}"#;
const SMALL_PAIR: &str = r#"{"epochs": 2, "embedding_dim": 8, "hidden_dim": 8, "feature_dim": 8, "learning_rate": 0.01, "max_tokens": 64}"#;

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&revcon(&["--help"])), 0);
    assert_eq!(code(&revcon(&["--version"])), 0);
    assert_eq!(code(&revcon(&[])), 1);
    assert_eq!(code(&revcon(&["frobnicate"])), 1);
    assert_eq!(code(&revcon(&["stats"])), 1);
    assert_eq!(code(&revcon(&["detect", "--corpus", "x.jsonl", "--format", "pdf"])), 1);
}

#[test]
fn stats_and_data_errors() {
    let w = workspace();
    let out = revcon(&["stats", "--corpus", s(&w.jsonl)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stats: Value = serde_json::from_slice(&out.stdout).unwrap();
    let total = &stats["total"];
    let sum: u64 = stats["venues"].as_object().unwrap().values().map(|v| v["reviews"].as_u64().unwrap()).sum();
    assert_eq!(total["reviews"].as_u64().unwrap(), sum);
    assert_eq!(total["papers"], 25);
    let manifest: Value = serde_json::from_str(stderr(&out).lines().last().unwrap()).unwrap();
    assert_eq!(manifest["command"], "stats");
    assert_eq!(manifest["exit_code"], 0);

    assert_eq!(code(&revcon(&["stats", "--corpus", s(&w.root.join("missing.jsonl"))])), 2);
    let bad = w.root.join("bad.jsonl");
    std::fs::write(&bad, "{not json\n").unwrap();
    assert_eq!(code(&revcon(&["stats", "--corpus", s(&bad)])), 2);

    let out = revcon(&["pairs", "--corpus", s(&w.snapshot), "--paper", "P0"]);
    assert_eq!(code(&out), 0);
    let pairs: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!pairs.is_empty() && pairs.iter().all(|p| p["paper_id"] == "P0"));
}

#[test]
fn bad_config_is_a_usage_error() {
    let w = workspace();
    let config = w.root.join("bad.json");
    std::fs::write(&config, r#"{"epochs": 1, "no_such_key": 3}"#).unwrap();
    let out = revcon(&["train", "disagree", "--corpus", s(&w.snapshot), "--config", s(&config), "--checkpoint", s(&w.root)]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn train_detect_report_and_evaluate() {
    let w = workspace();
    let ckpt = w.root.join("ckpt");
    let aspect_cfg = w.root.join("aspect.json");
    let pair_cfg = w.root.join("pair.json");
    std::fs::write(&aspect_cfg, SMALL_ASPECT).unwrap();
    std::fs::write(&pair_cfg, SMALL_PAIR).unwrap();

    let ingested = w.root.join("ingested.json");
    let out = revcon(&["ingest", "--corpus", s(&w.jsonl), "--out", s(&ingested)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(ingested.exists());

    // missing models are model errors
    let out = revcon(&["detect", "--corpus", s(&w.snapshot), "--paper", "P0", "--checkpoint", s(&ckpt)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));

    for (kind, cfg) in [("aspect", &aspect_cfg), ("disagree", &pair_cfg)] {
        let out = revcon(&["train", kind, "--corpus", s(&w.snapshot), "--config", s(cfg), "--seed", "7", "--checkpoint", s(&ckpt)]);
        assert_eq!(code(&out), 0, "train {kind}: {}", stderr(&out));
        assert!(ckpt.join(kind).join("weights.bin").exists());
        let manifest: Value = serde_json::from_str(stderr(&out).lines().last().unwrap()).unwrap();
        assert_eq!(manifest["settings"]["seed"], 7);
    }

    let out = revcon(&["detect", "--corpus", s(&w.snapshot), "--paper", "nope", "--checkpoint", s(&ckpt)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("paper not found"));
    let out = revcon(&["detect", "--corpus", s(&w.snapshot), "--paper", "LONE", "--checkpoint", s(&ckpt)]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let out = revcon(&["detect", "--corpus", s(&w.snapshot), "--paper", "P0", "--checkpoint", s(&ckpt), "--gold-labels"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["paper_id"], "P0");
    for key in ["generated_at", "manifest", "findings"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert!(report["manifest"]["disagree_ckpt"].is_string());

    let html = w.root.join("P0.html");
    let out = revcon(&["report", "--corpus", s(&w.snapshot), "--paper", "P0", "--checkpoint", s(&ckpt), "--out", s(&html)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let page = std::fs::read_to_string(&html).unwrap();
    assert!(page.starts_with("<!DOCTYPE html>") && !page.contains("<script"));

    let a = w.root.join("a.txt");
    let b = w.root.join("b.txt");
    std::fs::write(&a, "The proof is rigorous. The writing is clear.").unwrap();
    std::fs::write(&b, "").unwrap();
    let out = revcon(&["detect", "--reviews", s(&a), s(&b), "--checkpoint", s(&ckpt)]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let out = revcon(&["detect", "--reviews", s(&a), s(&a), "--checkpoint", s(&ckpt)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(serde_json::from_slice::<Vec<Value>>(&out.stdout).unwrap().len(), 0);

    for args in [
        vec!["evaluate", "aspect"],
        vec!["evaluate", "disagree"],
        vec!["evaluate", "e2e"],
        vec!["evaluate", "e2e", "--gold-labels"],
    ] {
        let mut full = args.clone();
        full.extend(["--corpus", s(&w.snapshot), "--checkpoint", s(&ckpt)]);
        let out = revcon(&full);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
        assert!(serde_json::from_slice::<Value>(&out.stdout).is_ok());
    }
    // a binary checkpoint is not an NLI model
    let out = revcon(&["evaluate", "disagree", "--corpus", s(&w.snapshot), "--checkpoint", s(&ckpt), "--nli", "bilstm-pair"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn llm_without_credentials_is_a_model_error() {
    let w = workspace();
    let config = w.root.join("llm.json");
    std::fs::write(&config, r#"{"credential_env": "REVCON_TEST_UNSET_KEY", "endpoint": "http://127.0.0.1:9"}"#).unwrap();
    let out = revcon(&["evaluate", "llm", "--corpus", s(&w.snapshot), "--config", s(&config)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("REVCON_TEST_UNSET_KEY"));
}

#[test]
fn annotation_round_trip() {
    let w = workspace();
    let batches = w.root.join("batches");
    let out = revcon(&["annotate", "export", "--corpus", s(&w.snapshot), "--out", s(&batches), "--batch-size", "50"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let files: Vec<String> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!files.is_empty());
    let mut args = vec!["annotate", "import", "--corpus", s(&w.snapshot), "--out"];
    let labeled = w.root.join("labeled.json");
    args.push(s(&labeled));
    args.extend(files.iter().map(String::as_str));
    let out = revcon(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(labeled.exists());
}
