use std::path::Path;
use std::process::{Command, Output};

use gat_core::adaptation::{fallback_statement, McqaSample};
use gat_core::data_io::{load_pool, NlvProvider, PromptCache};

fn gat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gat"))
        .args(args)
        .env_remove("GAT_CACHE_DIR")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_writes_a_valid_pool() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("u.jsonl");
    let out = gat(&["synth", "--scenario", "uniform", "--n", "25", "--k", "4", "--out", path_str(&pool)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let records = load_pool(&pool).unwrap();
    assert_eq!(records.len(), 25);
    assert!(records.iter().all(|r| r.main_probs == vec![0.25; 4]));

    let check = gat(&["validate", "--pool", path_str(&pool)]);
    assert!(check.status.success());
    assert!(String::from_utf8_lossy(&check.stdout).contains("25 valid records"));
}

#[test]
fn synth_to_stdout_is_deterministic() {
    let args = ["synth", "--scenario", "overconfident", "--n", "30", "--seed", "5"];
    let a = gat(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, gat(&args).stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 30);
}

#[test]
fn usage_errors_exit_two() {
    let out = gat(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--config"));
    assert_eq!(gat(&["synth", "--scenario", "bogus", "--n", "3"]).status.code(), Some(2));
    assert_eq!(gat(&[]).status.code(), Some(2));
}

#[test]
fn validate_reports_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("bad.jsonl");
    std::fs::write(
        &pool,
        concat!(
            r#"{"id":"a","options":["x","y"],"gold_index":0,"main_probs":[0.6,0.4]}"#, "\n",
            "not json\n",
            r#"{"id":"c","options":["x","y"],"gold_index":5,"main_probs":[0.6,0.4]}"#, "\n",
        ),
    )
    .unwrap();
    let out = gat(&["validate", "--pool", path_str(&pool)]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("2 problem(s), 1 valid records"), "{err}");
}

#[test]
fn help_documents_every_flag() {
    let expected: [(&str, &[&str]); 4] = [
        ("run", &["--config", "--output-dir", "--seed", "--runs", "--functions", "--format", "--jobs", "--emit-traces", "--reverse-cells"]),
        ("adapt", &["--pool", "--strategy", "--cache-only", "--cache-dir", "--model", "--surrogate-model", "--reformat-instruction", "--out"]),
        ("synth", &["--scenario", "--n", "--k", "--seed", "--error-rate", "--overconfident-fraction", "--out"]),
        ("validate", &["--pool"]),
    ];
    for (cmd, flags) in expected {
        let out = gat(&[cmd, "--help"]);
        assert!(out.status.success());
        let text = String::from_utf8_lossy(&out.stdout);
        for flag in flags {
            assert!(text.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
}

#[test]
fn run_fails_on_missing_pool() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"pool_paths": ["nowhere.jsonl"], "functions": ["Random"], "runs": 2}"#).unwrap();
    let out = gat(&["run", "--config", path_str(&cfg), "--output-dir", path_str(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cell(s) failed"));
    assert!(dir.path().join("o/report.csv").exists());
}

#[test]
fn run_prints_json_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("p.jsonl");
    assert!(gat(&["synth", "--scenario", "calibrated", "--n", "60", "--out", path_str(&pool)]).status.success());
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"pool_paths": ["p.jsonl"], "functions": ["Random"]}"#).unwrap();
    let out = gat(&[
        "run", "--config", path_str(&cfg), "--output-dir", path_str(&dir.path().join("o")),
        "--runs", "3", "--functions", "Random,UniformLM_CE", "--format", "json", "--emit-traces",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["runs"], 3);
    assert_eq!(json["cells"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("o/report.csv").exists());
    assert!(dir.path().join("o/traces/p_UniformLM_CE.jsonl").exists());
}

#[test]
fn adapt_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/golden/mcqa_pool.jsonl");
    let cache_dir = dir.path().join("cache");
    let provider = NlvProvider::cache_only(PromptCache::open(&cache_dir).unwrap(), "main");
    for r in load_pool(fixture).unwrap() {
        let s = McqaSample::from_record(&r).unwrap();
        // MostConf picks option 0 for every fixture sample.
        provider.seed_entry(&s.context, &fallback_statement(&s.question, &s.options[0]), vec![0.6, 0.4]).unwrap();
    }
    let out_pool = dir.path().join("nlv.jsonl");
    let out = gat(&[
        "adapt", "--pool", fixture, "--strategy", "mostconf", "--cache-only",
        "--cache-dir", path_str(&cache_dir), "--out", path_str(&out_pool),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("adapted 3 of 3"));
    let records = load_pool(&out_pool).unwrap();
    let gold: Vec<usize> = records.iter().map(|r| r.gold_index).collect();
    assert_eq!(gold, vec![0, 1, 1]);

    // A different strategy misses the cache and excludes every sample.
    let out = gat(&[
        "adapt", "--pool", fixture, "--strategy", "leastconf", "--cache-only",
        "--cache-dir", path_str(&cache_dir),
    ]);
    assert!(stderr(&out).contains("adapted 0 of 3"), "{}", stderr(&out));
}

#[test]
fn adapt_needs_a_cache_dir() {
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/golden/mcqa_pool.jsonl");
    let out = gat(&["adapt", "--pool", fixture, "--strategy", "runnerup", "--cache-only"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("GAT_CACHE_DIR"));
}
