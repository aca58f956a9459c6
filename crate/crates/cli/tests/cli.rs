mod common;

use std::collections::BTreeSet;
use std::fs;

use common::{manifest, ok, run, snapshot, stderr, stdout, toy, world};
use serde_json::Value;

#[test]
fn build_summary_matches_mask_header() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    let out = ok(run(&m, &["build"]));
    assert_eq!(stdout(&out).trim(), "rows=2 cols=3 nnz=4");

    // Recount from the triples: distinct (item, predicate, object) edges over
    // distinct (predicate, object) features, literals excluded.
    let triples = fs::read_to_string(dir.path().join("triples.nt")).unwrap();
    let edges: BTreeSet<(String, String, String)> = triples
        .lines()
        .filter(|l| !l.contains('"'))
        .map(|l| {
            let t: Vec<&str> = l.split_whitespace().collect();
            (t[0].to_string(), t[1].to_string(), t[2].to_string())
        })
        .collect();
    let items: BTreeSet<_> = edges.iter().map(|e| &e.0).collect();
    let features: BTreeSet<_> = edges.iter().map(|e| (&e.1, &e.2)).collect();
    let header = format!("{} {} {}", items.len(), features.len(), edges.len());
    let mask = fs::read_to_string(dir.path().join("out/mask.txt")).unwrap();
    assert_eq!(mask.lines().next().unwrap(), header);
    assert_eq!(header, "2 3 4");
    assert!(dir.path().join("out/manifest.toml").is_file());
    let features = fs::read_to_string(dir.path().join("out/features.tsv")).unwrap();
    assert_eq!(features.lines().count(), 4);
}

#[test]
fn missing_ratings_path_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    fs::remove_file(dir.path().join("ratings.csv")).unwrap();
    let out = run(&dir.path().join("semauto.toml"), &["build"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("paths.ratings"), "{}", stderr(&out));

    let m = dir.path().join("bare.toml");
    fs::write(&m, "[paths]\ntriples = \"triples.nt\"\nmapping = \"mapping.tsv\"\n").unwrap();
    let out = run(&m, &["build"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("`paths.ratings` is missing"), "{}", stderr(&out));
}

#[test]
fn build_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    world(dir.path());
    let m = manifest(dir.path(), "");
    ok(run(&m, &["build"]));
    let first = snapshot(&dir.path().join("out"));
    ok(run(&m, &["build"]));
    assert_eq!(snapshot(&dir.path().join("out")), first);
}

#[test]
fn toy_training_logs_defaults_and_skips_users_without_ratings() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    ok(run(&m, &["build"]));
    let out = ok(run(&m, &["train", "--users", "all"]));
    let log = stderr(&out);
    assert!(log.contains("epochs=1000 lr=0.03"), "{log}");
    assert!(log.contains("user has no ratings in the catalog; skipped"), "{log}");
    assert!(stdout(&out).contains("trained 2 users, skipped 1"));
    assert!(dir.path().join("out/models/user_1.model").is_file());
    assert!(dir.path().join("out/profiles/user_2.tsv").is_file());
    assert!(!dir.path().join("out/models/user_3.model").exists());
}

#[test]
fn unknown_user_fails() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    ok(run(&m, &["build"]));
    let out = run(&m, &["train", "--users", "1,77"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown user 77"));
    let out = run(&m, &["recommend", "--user", "77"]);
    assert!(!out.status.success());
}

#[test]
fn explain_outputs_per_style() {
    let dir = tempfile::tempdir().unwrap();
    world(dir.path());
    let m = manifest(dir.path(), "");
    ok(run(&m, &["build"]));
    ok(run(&m, &["train", "--users", "3,8", "--epochs", "300"]));

    let out = ok(run(&m, &["recommend", "--user", "3"]));
    assert_eq!(stdout(&out).lines().count(), 5);
    assert_eq!(fs::read_to_string(dir.path().join("out/recs/user_3.tsv")).unwrap().lines().count(), 6);

    let out = ok(run(&m, &["explain", "--user", "3", "--style", "popularity"]));
    assert!(stdout(&out).contains(
        "We suggest these items since they are very popular among people who like the same movies as you."
    ));

    let out = ok(run(&m, &["explain", "--user", "8", "--style", "pairwise"]));
    assert!(stdout(&out).contains("because you may prefer:"));
    let bundle: Value =
        serde_json::from_str(fs::read_to_string(dir.path().join("out/explanations/user_8.jsonl")).unwrap().trim())
            .unwrap();
    let cols = |key: &str| -> BTreeSet<u64> {
        bundle[key].as_array().unwrap().iter().map(|f| f["column"].as_u64().unwrap()).collect()
    };
    assert!(!cols("features_i").is_empty());
    assert!(cols("features_i").is_disjoint(&cols("features_j")));

    ok(run(&m, &["explain", "--user", "8", "--style", "pointwise", "--k", "5"]));
    let bundle: Value =
        serde_json::from_str(fs::read_to_string(dir.path().join("out/explanations/user_8.jsonl")).unwrap().trim())
            .unwrap();
    assert!(bundle["features_i"].as_array().unwrap().len() <= 5);
    assert!(bundle["features_j"].as_array().unwrap().len() <= 5);

    // Every configured style in one call, one bundle per line.
    ok(run(&m, &["explain", "--user", "3"]));
    let lines = fs::read_to_string(dir.path().join("out/explanations/user_3.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 4);
}

#[test]
fn invalid_style_lists_valid_tags() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    let out = run(&m, &["explain", "--user", "1", "--style", "sideways"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    for tag in ["popularity", "non_personalized", "pointwise", "pairwise"] {
        assert!(err.contains(tag), "{err}");
    }
}

#[test]
fn explain_needs_a_trained_model() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    ok(run(&m, &["build"]));
    let out = run(&m, &["explain", "--user", "1"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("semauto train"), "{}", stderr(&out));
}

#[test]
fn simulate_rejects_empty_arms_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    world(dir.path());
    let m = manifest(dir.path(), "[train]\nepochs = 50\n[study]\ncandidate_sample = 20\n");
    let out = run(&m, &["simulate", "--per-arm", "0"]);
    assert!(!out.status.success());

    let args = ["simulate", "--per-arm", "2", "--arms", "pairwise/both,popularity/semantic", "--jobs", "2"];
    ok(run(&m, &args));
    let report = fs::read(dir.path().join("out/report.json")).unwrap();
    let log = fs::read(dir.path().join("out/study/events.jsonl")).unwrap();
    ok(run(&m, &args));
    assert_eq!(fs::read(dir.path().join("out/report.json")).unwrap(), report);
    assert_eq!(fs::read(dir.path().join("out/study/events.jsonl")).unwrap(), log);

    ok(run(&m, &["report", "--arms", "pairwise/both,popularity/semantic"]));
    assert_eq!(fs::read(dir.path().join("out/report.json")).unwrap(), report);
    let r: Value = serde_json::from_slice(&report).unwrap();
    assert_eq!(r["arms"].as_array().unwrap().len(), 2);
    assert!(r["arms"].as_array().unwrap().iter().all(|a| a["n"] == 2 && a["sample_size"]["pass"] == false));
}

#[test]
fn report_without_log_fails() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy(dir.path());
    let out = run(&m, &["report"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("no event log"));
}
