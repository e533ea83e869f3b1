use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tmprune::tm::{io, rules::literal_name, Polarity};

fn tmprune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmprune")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = tmprune(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn train_small(dir: &Path, extra: &[&str]) {
    let out = dir.to_str().unwrap();
    let mut args = vec!["train", "--epochs", "40", "--metrics-every", "10", "--clauses", "20", "--out", out];
    if !extra.contains(&"--seed") {
        args.extend_from_slice(&["--seed", "5"]);
    }
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn one_epoch_writes_one_metrics_row() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["train", "--epochs", "1", "--samples-per-epoch", "10", "--out", dir.path().to_str().unwrap()]);
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("epoch,accuracy,mean_literals,freq_X1,"));
    assert!(lines[1].starts_with("1,"));
    for name in ["model.tmpm", "rules.txt", "summary.json", "config.json"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
}

#[test]
fn seeded_training_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    train_small(a.path(), &[]);
    train_small(b.path(), &[]);
    for name in ["metrics.csv", "model.tmpm", "rules.txt", "summary.json", "config.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name} differs");
    }
    let cfg: Value = serde_json::from_slice(&std::fs::read(a.path().join("config.json")).unwrap()).unwrap();
    assert!(cfg["out"].is_null());
    let c = tempfile::tempdir().unwrap();
    train_small(c.path(), &["--seed", "6"]);
    assert_ne!(std::fs::read(a.path().join("model.tmpm")).unwrap(), std::fs::read(c.path().join("model.tmpm")).unwrap());
}

#[test]
fn config_file_round_trips_through_train() {
    let dir = tempfile::tempdir().unwrap();
    train_small(dir.path(), &["--no-type3"]);
    let cfg: Value = serde_json::from_slice(&std::fs::read(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["type3"], Value::Bool(false));
    assert_eq!(cfg["tm"]["num_clauses"], 20);
    let again = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("config.json");
    ok(&["train", "--config", cfg_path.to_str().unwrap(), "--out", again.path().to_str().unwrap()]);
    assert_eq!(
        std::fs::read(dir.path().join("metrics.csv")).unwrap(),
        std::fs::read(again.path().join("metrics.csv")).unwrap()
    );
}

struct ParsedClause {
    sign: i8,
    weight: u32,
    literals: Vec<String>,
}

/// Test-side parser for `+1 w=3: X1 AND NOT X3` lines.
fn parse_rule(line: &str) -> ParsedClause {
    let (head, body) = line.split_once(": ").expect("colon separator");
    let (sign, weight) = head.split_once(" w=").expect("weight field");
    let literals = if body == "TRUE" {
        Vec::new()
    } else {
        body.split(" AND ").map(str::to_string).collect()
    };
    for lit in &literals {
        let name = lit.strip_prefix("NOT ").unwrap_or(lit);
        assert!(!name.is_empty() && !name.contains(' '), "bad literal `{lit}`");
    }
    ParsedClause {
        sign: sign.parse().unwrap(),
        weight: weight.parse().unwrap(),
        literals,
    }
}

#[test]
fn exported_rules_parse_back_into_the_model() {
    let dir = tempfile::tempdir().unwrap();
    train_small(dir.path(), &[]);
    let model_path = dir.path().join("model.tmpm");
    let (model, _) = io::load(&std::fs::read(&model_path).unwrap()).unwrap();
    let text = String::from_utf8(ok(&["export-rules", "--model", model_path.to_str().unwrap(), "--net", "toy"]).stdout).unwrap();
    assert_eq!(text, std::fs::read_to_string(dir.path().join("rules.txt")).unwrap());
    let parsed: Vec<ParsedClause> = text.lines().map(parse_rule).collect();
    assert_eq!(parsed.len(), model.clauses().len());
    for (p, c) in parsed.iter().zip(model.clauses()) {
        assert_eq!(p.sign, if c.polarity() == Polarity::Positive { 1 } else { -1 });
        assert_eq!(p.weight, c.weight());
        let want: Vec<String> = c.included_literals().map(|l| literal_name(l, None)).collect();
        assert_eq!(p.literals, want);
    }
}

#[test]
fn corrupt_model_fails_with_runtime_status() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tmpm");
    std::fs::write(&bad, b"TMPMgarbage").unwrap();
    for cmd in ["export-rules", "analyze"] {
        let out = tmprune(&[cmd, "--model", bad.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(!out.stderr.is_empty());
    }
    let missing = tmprune(&["export-rules", "--model", dir.path().join("nope").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(tmprune(&["train", "--epochs", "zero"]).status.code(), Some(1));
    assert_eq!(tmprune(&["nonsense"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = tmprune(&["train", "--epochs", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epochs"));
    // A rejected run leaves nothing behind.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    assert_eq!(tmprune(&["--help"]).status.code(), Some(0));
}

#[test]
fn converge_reports_verdicts() {
    let out = ok(&["converge", "--d", "100", "--runs", "20", "--horizon", "100000"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rates"][0]["variable"], "X1");
    assert_eq!(report["rates"][0]["verdict"], "Keep");
    assert_eq!(report["rates"][1]["verdict"], "Prune");
    assert_eq!(report["keep_condition"]["holds"], true);
    let x2 = &report["simulation"]["outcomes"][1];
    assert_eq!(x2["variable"], "X2");
    assert!(x2["prune_frequency"].as_f64().unwrap() >= 0.9);

    let weak = ok(&["converge", "--p-d", "0.5", "--runs", "0"]);
    let report: Value = serde_json::from_slice(&weak.stdout).unwrap();
    assert_eq!(report["rates"][0]["verdict"], "Prune");
    assert_eq!(report["rates"][1]["verdict"], "Prune");
    assert_eq!(report["keep_condition"]["holds"], false);
    assert!(report["simulation"].is_null());
}

#[test]
fn sweep_leaderboard_matches_an_independent_resort() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    ok(&["sweep", "--trials", "3", "--epochs", "30", "--seed", "9", "--out", out.to_str().unwrap()]);
    let csv = std::fs::read_to_string(out.join("leaderboard.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        for name in ["T", "s", "d", "ta_state_bits", "ia_state_bits", "weighted", "mb_clauses", "test_accuracy"] {
            assert!(!r[col(name)].is_empty(), "{name} empty");
        }
    }
    let key = |r: &Vec<String>| (std::cmp::Reverse(r[col("mb_clauses")].parse::<usize>().unwrap()), r[col("trial")].parse::<usize>().unwrap());
    let mut resorted = rows.clone();
    resorted.sort_by_key(key);
    assert_eq!(resorted, rows);
    let ranks: Vec<usize> = rows.iter().map(|r| r[col("rank")].parse().unwrap()).collect();
    assert_eq!(ranks, vec![1, 2, 3]);
    let report: Value = serde_json::from_slice(&std::fs::read(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["ranked"].as_array().unwrap().len(), 3);
}

#[test]
fn bn_sample_is_seeded() {
    let a = ok(&["bn-sample", "--count", "50", "--seed", "3"]).stdout;
    let b = ok(&["bn-sample", "--count", "50", "--seed", "3"]).stdout;
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "X1 X2 X3 X4 X5 X6 X7 X8 Y");
    assert_eq!(text.lines().count(), 51);
    let ds = String::from_utf8(ok(&["bn-sample", "--count", "5", "--dataset"]).stdout).unwrap();
    assert!(ds.lines().next().unwrap().ends_with("label"));
}

#[test]
fn analyze_reports_categories_for_net_models() {
    let dir = tempfile::tempdir().unwrap();
    train_small(dir.path(), &[]);
    let model = dir.path().join("model.tmpm");
    let out = ok(&["analyze", "--model", model.to_str().unwrap(), "--net", "toy"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["variable_frequency"].as_array().unwrap().len(), 8);
    let pooled = report["categories"]["pooled"].as_object().unwrap();
    let total: u64 = pooled.values().map(|v| v.as_u64().unwrap()).sum();
    assert!(total <= 20);
    let summary: Value = serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(report["categories"]["clean"], summary["mb_clauses"]);
}

#[test]
fn image_training_on_the_fixture() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "train",
        "--images",
        data.join("mnist01-images-idx3-ubyte.gz").to_str().unwrap(),
        "--labels",
        data.join("mnist01-labels-idx1-ubyte.gz").to_str().unwrap(),
        "--limit",
        "300",
        "--test-limit",
        "100",
        "--epochs",
        "10",
        "--clauses",
        "20",
        "--vote-threshold",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let summary: Value = serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["feature_count"], 784);
    assert_eq!(summary["train_rows"], 300);
    assert_eq!(summary["test_rows"], 100);
    assert!(summary["test_accuracy"].as_f64().unwrap() > 0.8);
}
