//! The `cefrscore` binary end to end.

mod support;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cefrscore::features::{read_features_csv, FEATURE_COLUMNS};
use support::synthetic;

fn cefrscore(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cefrscore"))
        .current_dir(dir)
        .env_remove("AES_API_KEY")
        .env_remove("RUST_LOG")
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Run {
        Run {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, p: &str) -> std::path::PathBuf {
        self.dir.path().join(p)
    }

    fn synthetic_args(&self) -> Vec<String> {
        vec![
            "--corpus".into(),
            synthetic("corpus.jsonl").display().to_string(),
            "--predictions".into(),
            synthetic("predictions.jsonl").display().to_string(),
            "--embeddings".into(),
            synthetic("embeddings.txt").display().to_string(),
        ]
    }

    fn run(&self, extra: &[&str]) -> Output {
        let mut args = self.synthetic_args();
        args.extend(extra.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        cefrscore(self.dir.path(), &refs)
    }
}

#[test]
fn features_match_oracle_csv() {
    let r = Run::new();
    let o = r.run(&["features"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let got = read_features_csv(&fs::read_to_string(r.path("out/features.csv")).unwrap()).unwrap();
    let want = read_features_csv(&fs::read_to_string(synthetic("expected_features.csv")).unwrap()).unwrap();
    assert_eq!(got.len(), 30);
    for ((id, g), (_, w)) in got.iter().zip(&want) {
        for (col, (a, b)) in FEATURE_COLUMNS.iter().zip(g.values().into_iter().zip(w.values())) {
            match (a, b) {
                (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{id} {col}"),
                (a, b) => assert_eq!(a, b, "{id} {col}"),
            }
        }
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r.path("out/features.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["rows"], 30);
    assert!(meta["resource_digests"]["embeddings"].is_string());
    assert!(meta["config_digest"].is_string());
}

#[test]
fn empty_corpus_gives_header_only_csv() {
    let r = Run::new();
    fs::write(r.path("empty.jsonl"), "").unwrap();
    let emb = synthetic("embeddings.txt").display().to_string();
    let o = cefrscore(
        r.dir.path(),
        &["--corpus", "empty.jsonl", "--embeddings", &emb, "features"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(r.path("out/features.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("id,gram_rate,"));
}

#[test]
fn missing_embeddings_names_the_path() {
    let r = Run::new();
    let corpus = synthetic("corpus.jsonl").display().to_string();
    let o = cefrscore(
        r.dir.path(),
        &["--corpus", &corpus, "--embeddings", "no/such/vectors.txt", "features"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no/such/vectors.txt"), "{}", stderr(&o));
}

#[test]
fn grade_rerun_is_identical_and_cached() {
    let r = Run::new();
    let o = r.run(&["grade"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = fs::read(r.path("out/scores_gt.jsonl")).unwrap();
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 270);
    let o = r.run(&["grade"]);
    assert!(o.status.success());
    assert_eq!(fs::read(r.path("out/scores_gt.jsonl")).unwrap(), first);
    let stamp: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r.path("out/grade_gt.run.json")).unwrap()).unwrap();
    assert_eq!(stamp["backend_calls"], 0);
    assert_eq!(stamp["cache_hits"], 270);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r.path("out/grade_gt.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 42);
    assert_eq!(meta["condition"], "gt");
    assert_eq!(meta["model"], "stub:echo-holistic");
    assert!(!r.path("out/grade_gt.failures.json").exists());
}

#[test]
fn missing_ground_truth_fails_before_any_call() {
    let r = Run::new();
    let mut lines: Vec<String> = fs::read_to_string(synthetic("corpus.jsonl"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let mut row: serde_json::Value = serde_json::from_str(&lines[4]).unwrap();
    let obj = row.as_object_mut().unwrap();
    obj.remove("score");
    obj.remove("cefr");
    lines[4] = row.to_string();
    fs::write(r.path("c.jsonl"), lines.join("\n") + "\n").unwrap();
    let o = cefrscore(
        r.dir.path(),
        &[
            "--corpus",
            "c.jsonl",
            "--condition",
            "none",
            "--condition",
            "gt",
            "grade",
        ],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("ground-truth"), "{}", stderr(&o));
    assert!(!r.path("out/scores_none.jsonl").exists());
    assert!(!r.path(".cefrscore-cache").exists() || fs::read_dir(r.path(".cefrscore-cache")).unwrap().next().is_none());
}

#[test]
fn tiny_corpus_reports_absent_cells_with_warning() {
    let r = Run::new();
    let lines: Vec<&str> = include_str!("../../../data/synthetic/corpus.jsonl")
        .lines()
        .take(2)
        .collect();
    fs::write(r.path("two.jsonl"), lines.join("\n") + "\n").unwrap();
    let emb = synthetic("embeddings.txt").display().to_string();
    for cmd in ["features", "grade", "report"] {
        let o = cefrscore(r.dir.path(), &["--corpus", "two.jsonl", "--embeddings", &emb, cmd]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        if cmd == "report" {
            assert!(stderr(&o).to_lowercase().contains("warn"), "{}", stderr(&o));
        }
    }
    let csv = fs::read_to_string(r.path("out/report/correlations_gt.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.split(',').skip(1).all(str::is_empty), "{line}");
    }
    let md = fs::read_to_string(r.path("out/report/correlations_gt.md")).unwrap();
    assert!(md.contains("too few"), "{md}");
    let friedman: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r.path("out/report/friedman_gt.json")).unwrap()).unwrap();
    assert!(friedman["statistic"].is_number());
}

#[test]
fn report_bundle_contents() {
    let r = Run::new();
    for cmd in ["features", "grade", "report"] {
        let o = r.run(&[
            "--condition",
            "none",
            "--condition",
            "predicted",
            "--backend",
            "stub:feature-linked",
            cmd,
        ]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    let dir = r.path("out/report");
    for f in [
        "correlations_none.csv",
        "correlations_predicted.md",
        "reconstruction.csv",
        "reconstruction.md",
        "friedman_none.json",
        "nemenyi_predicted.csv",
        "nemenyi_none.svg",
        "discrepancies_none.md",
        "discrepancies_none.csv",
        "manifest.json",
    ] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(
        manifest["files"].as_object().unwrap().len(),
        fs::read_dir(&dir).unwrap().count() - 1
    );
    let recon = fs::read_to_string(dir.join("reconstruction.csv")).unwrap();
    assert_eq!(recon.lines().count(), 3);
    assert!(
        recon.lines().skip(1).all(|l| l.split(',').all(|c| !c.is_empty())),
        "{recon}"
    );
    let csv = fs::read_to_string(dir.join("nemenyi_none.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);

    // a wider gap lists no more essays than the default
    let count = |gap: &str| {
        let o = r.run(&["--condition", "none", "--gap", gap, "inspect-discrepancies"]);
        assert!(o.status.success());
        fs::read_to_string(dir.join("discrepancies_none.csv"))
            .unwrap()
            .lines()
            .count()
            - 1
    };
    assert!(count("1") >= count("3"));
    assert_eq!(count("9"), 0);
}

#[test]
fn report_before_grade_is_a_data_error() {
    let r = Run::new();
    let o = r.run(&["correlate"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let r = Run::new();
    assert_eq!(cefrscore(r.dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(r.run(&["--backend", "cloud", "grade"]).status.code(), Some(1));
    assert_eq!(r.run(&["--condition", "sometimes", "grade"]).status.code(), Some(1));
    assert_eq!(cefrscore(r.dir.path(), &["grade"]).status.code(), Some(1));
    assert_eq!(cefrscore(r.dir.path(), &["--help"]).status.code(), Some(0));
    // live backend without credentials
    assert_eq!(r.run(&["--backend", "live", "grade"]).status.code(), Some(1));
}

#[test]
fn malformed_corpus_exits_two() {
    let r = Run::new();
    fs::write(r.path("bad.jsonl"), "{\"id\": \"a\"}\n").unwrap();
    let o = cefrscore(r.dir.path(), &["--corpus", "bad.jsonl", "ingest"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unreachable_backend_exits_three_with_failures_manifest() {
    let r = Run::new();
    let mut args = r.synthetic_args();
    args.extend(
        [
            "--backend",
            "live",
            "--endpoint",
            "http://127.0.0.1:9/v1/chat/completions",
            "--condition",
            "none",
            "grade",
        ]
        .map(String::from),
    );
    let o = Command::new(env!("CARGO_BIN_EXE_cefrscore"))
        .current_dir(r.dir.path())
        .env("AES_API_KEY", "test-key")
        .args(&args)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let f: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r.path("out/grade_none.failures.json")).unwrap()).unwrap();
    assert!(f["aborted"].is_string());
    assert!(r.path("out/scores_none.jsonl").exists());
}

#[test]
fn config_file_with_overrides() {
    let r = Run::new();
    fs::write(
        r.path("run.toml"),
        format!(
            "corpus = {:?}\nseed = 3\nconditions = [\"none\"]\noutput_dir = \"results\"\n[backend]\nkind = \"stub:fixed:B2\"\n[resources]\nembeddings = {:?}\n",
            synthetic("corpus.jsonl"),
            synthetic("embeddings.txt")
        ),
    )
    .unwrap();
    let o = cefrscore(r.dir.path(), &["--config", "run.toml", "--seed", "5", "ingest"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cefrscore(r.dir.path(), &["--config", "run.toml", "--seed", "5", "grade"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r.path("results/grade_none.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["model"], "stub:fixed:B2");
    let ingest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r.path("results/ingest.json")).unwrap()).unwrap();
    assert_eq!(ingest["essays"], 30);
}
