//! Command-line behavior: help surfaces, exit codes, and stage wiring.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lifetraj"))
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .to_string()
}

#[test]
fn help_exists_for_every_subcommand() {
    for sub in [
        "ingest", "extract", "annotate", "train", "classify", "evaluate", "analyze", "pipeline",
    ] {
        let out = bin().args([sub, "--help"]).output().unwrap();
        assert!(out.status.success(), "{sub} --help failed");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("Usage"), "{sub} --help lacks usage text");
    }
    let top = bin().arg("--help").output().unwrap();
    assert!(top.status.success());
}

#[test]
fn unknown_flag_prints_usage_and_exits_nonzero() {
    let out = bin().args(["ingest", "--bogus-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.to_lowercase().contains("usage") || text.contains("--bogus-flag"));
}

#[test]
fn missing_input_file_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "ingest",
            "--corpus",
            "/nonexistent/corpus.jsonl",
            "--out",
            dir.path().join("s.jsonl").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("s.jsonl").exists(), "no partial output");
}

#[test]
fn ingest_reports_malformed_lines_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(
        &corpus,
        "{\"page_id\":\"a\",\"title\":\"A\",\"paragraphs\":[\"One. Two.\"]}\nnot json\n",
    )
    .unwrap();
    let out_path = dir.path().join("sentences.jsonl");
    let out = bin()
        .args([
            "ingest",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("1 malformed"), "stderr: {stderr}");
    let lines = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(lines.lines().count(), 2);
}

#[test]
fn train_ablation_flags_produce_pure_ce_log() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("model.json");
    let log = dir.path().join("train.log.jsonl");
    let out = bin()
        .args([
            "train",
            "--config",
            &fixture("config/tiny.json"),
            "--labeled",
            &fixture("labeled.jsonl"),
            "--out",
            ckpt.to_str().unwrap(),
            "--log",
            log.to_str().unwrap(),
            "--no-scl",
            "--no-ssl",
            "--max-epochs",
            "2",
            "--seed",
            "42",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "train failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let log_text = std::fs::read_to_string(&log).unwrap();
    assert!(!log_text.is_empty());
    for line in log_text.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(record["l_scl"].as_f64().unwrap(), 0.0);
        assert_eq!(record["alpha"].as_f64().unwrap(), 0.0);
        assert_eq!(record["l_u"].as_f64().unwrap(), 0.0);
        let l = record["l"].as_f64().unwrap();
        let l_ce = record["l_ce"].as_f64().unwrap();
        assert!((l - l_ce).abs() < 1e-12, "pure-CE run must have L == L_CE");
    }
    assert!(ckpt.exists());
}

#[test]
fn evaluate_writes_report_with_four_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("model.json");
    let status = bin()
        .args([
            "train",
            "--config",
            &fixture("config/tiny.json"),
            "--labeled",
            &fixture("labeled.jsonl"),
            "--unlabeled",
            &fixture("unlabeled.jsonl"),
            "--out",
            ckpt.to_str().unwrap(),
            "--max-epochs",
            "2",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report = dir.path().join("report.json");
    let out = bin()
        .args([
            "evaluate",
            "--model",
            ckpt.to_str().unwrap(),
            "--test",
            &fixture("labeled.jsonl"),
            "--regular",
            &fixture("regular.jsonl"),
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "evaluate failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for key in ["accuracy", "precision", "recall", "f1"] {
        assert!(
            value["overall"].get(key).is_some(),
            "report missing overall.{key}"
        );
    }
    assert!(value["per_page"]["avg_recall"].is_number());
    assert!(value["manual"].is_object());
    assert!(value["llm_recall"].is_number());
}

#[test]
fn classify_requires_sentences_for_extract_shaped_input() {
    let dir = tempfile::tempdir().unwrap();
    // minimal extract-shaped record
    let candidates = dir.path().join("candidates.jsonl");
    std::fs::write(
        &candidates,
        r#"{"page_id":"p","paragraph_index":0,"sentence_index":0,"person":{"category":"PERSON","token_start":0,"token_end":1,"text":"He"},"time":{"category":"TIME","token_start":5,"token_end":6,"text":"1920"},"location":{"category":"LOCATION","token_start":3,"token_end":4,"text":"Paris"},"verb":{"category":"VERB","token_start":1,"token_end":2,"text":"moved"}}"#,
    )
    .unwrap();
    let ckpt = dir.path().join("model.json");
    let status = bin()
        .args([
            "train",
            "--config",
            &fixture("config/tiny.json"),
            "--labeled",
            &fixture("labeled.jsonl"),
            "--no-ssl",
            "--out",
            ckpt.to_str().unwrap(),
            "--max-epochs",
            "1",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let out = bin()
        .args([
            "classify",
            "--model",
            ckpt.to_str().unwrap(),
            "--candidates",
            candidates.to_str().unwrap(),
            "--out",
            dir.path().join("pred.jsonl").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--sentences"));
}
