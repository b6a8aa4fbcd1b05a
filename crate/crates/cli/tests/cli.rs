use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use navfidelity::episodes::{load_episodes, reference_predictions, predictions_to_string, write_episodes, Episode};
use navfidelity::graph::load_connectivity;

fn navfidelity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_navfidelity"))
        .args(args)
        .env_remove("NAVFIDELITY_CONNECTIVITY_DIR")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(dir: &Path, kind: &str, size: &str) {
    let out = navfidelity(&["fixture", kind, size, "--out", s(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fixture_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), "line", "5");
    let (g, report) = load_connectivity(dir.path(), "line").unwrap();
    assert_eq!(g.len(), 5);
    assert_eq!(g.edge_count(), 4);
    assert_eq!(report.asymmetric_links, 0);
    let eps = load_episodes(&dir.path().join("episodes.json")).unwrap();
    assert_eq!(eps[0].reference, ["v0", "v1", "v2", "v3", "v4"]);
}

#[test]
fn eval_with_reference_predictions_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), "grid", "4");
    let eps = load_episodes(&dir.path().join("episodes.json")).unwrap();
    let preds = dir.path().join("preds.jsonl");
    fs::write(&preds, predictions_to_string(&reference_predictions(&eps))).unwrap();
    let report = dir.path().join("report.json");
    let out = navfidelity(&[
        "eval",
        "--episodes",
        s(&dir.path().join("episodes.json")),
        "--predictions",
        s(&preds),
        "--connectivity",
        s(dir.path()),
        "--out",
        s(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v = json(&report);
    assert_eq!(v["table"]["cls"], 100.0);
    assert_eq!(v["table"]["sr"], 100.0);
    assert_eq!(v["table"]["ne"], 0.0);
    assert_eq!(v["coverage"], 1.0);

    let table = dir.path().join("report.txt");
    let out = navfidelity(&[
        "--workers",
        "2",
        "eval",
        "--episodes",
        s(&dir.path().join("episodes.json")),
        "--predictions",
        s(&preds),
        "--connectivity",
        s(dir.path()),
        "--format",
        "table",
        "--out",
        s(&table),
    ]);
    assert!(out.status.success());
    assert!(fs::read_to_string(&table).unwrap().contains("100.0"));
}

#[test]
fn malformed_prediction_line_is_fatal_and_named() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), "line", "5");
    let preds = dir.path().join("preds.jsonl");
    fs::write(&preds, "{\"instr_id\": \"0_0\", \"trajectory\": [\"v0\", \"v1\"]}\n{not json\n").unwrap();
    let report = dir.path().join("report.json");
    let out = navfidelity(&[
        "eval",
        "--episodes",
        s(&dir.path().join("episodes.json")),
        "--predictions",
        s(&preds),
        "--connectivity",
        s(dir.path()),
        "--out",
        s(&report),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(!report.exists());
}

#[test]
fn compose_joins_two_line_episodes_into_six_instructions() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), "line", "5");
    let ep = |id: u64, path: &[&str], n: usize| Episode {
        path_id: id,
        graph_id: "line".into(),
        reference: path.iter().map(|s| s.to_string()).collect(),
        heading: 0.0,
        distance: None,
        instructions: (0..n).map(|k| format!("p{id} i{k}")).collect(),
        provenance: None,
    };
    let src = dir.path().join("pair.json");
    write_episodes(&[ep(1, &["v0", "v1"], 2), ep(2, &["v3", "v4"], 3)], &src).unwrap();
    let composed = dir.path().join("composed.json");
    let args = |out: &Path| {
        vec![
            "compose".to_string(),
            "--episodes".into(),
            s(&src).into(),
            "--out".into(),
            s(out).into(),
            "--join-threshold".into(),
            "3".into(),
        ]
    };
    // The connectivity directory comes from the environment when the flag is absent.
    let out = Command::new(env!("CARGO_BIN_EXE_navfidelity"))
        .args(args(&composed))
        .env("NAVFIDELITY_CONNECTIVITY_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let eps = load_episodes(&composed).unwrap();
    assert_eq!(eps.len(), 1);
    assert_eq!(eps[0].reference, ["v0", "v1", "v2", "v3", "v4"]);
    assert_eq!(eps[0].instructions.len(), 6);

    // Same bytes with a different worker count.
    let again = dir.path().join("again.json");
    let mut a = vec!["--workers".to_string(), "1".into()];
    a.extend(args(&again));
    a.extend(["--connectivity".into(), s(dir.path()).into()]);
    let out = Command::new(env!("CARGO_BIN_EXE_navfidelity")).args(&a).output().unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&composed).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn connectivity_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), "line", "5");
    let out_file = dir.path().join("stats.json");
    let out = Command::new(env!("CARGO_BIN_EXE_navfidelity"))
        .args([
            "stats",
            "--episodes",
            s(&dir.path().join("episodes.json")),
            "--connectivity",
            s(dir.path()),
            "--out",
            s(&out_file),
        ])
        .env("NAVFIDELITY_CONNECTIVITY_DIR", "/nonexistent")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out_file);
    assert_eq!(v["sample_count"], 3);
    assert_eq!(v["mean_reference_length"], 4.0);
    assert_eq!(v["mean_direct_distance"], 4.0);
}

#[test]
fn random_baseline_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), "grid", "4");
    let run = |name: &str, workers: &str| {
        let out_file = dir.path().join(name);
        let out = navfidelity(&[
            "--workers",
            workers,
            "random-baseline",
            "--episodes",
            s(&dir.path().join("episodes.json")),
            "--connectivity",
            s(dir.path()),
            "--samples",
            "5000",
            "--seed",
            "11",
            "--out",
            s(&out_file),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(out_file).unwrap()
    };
    let a = run("a.json", "1");
    assert_eq!(a, run("b.json", "4"));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["count"], 5000);
    assert_eq!(v["seed"], 11);
}

#[test]
fn cache_distances_writes_reusable_cache() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), "corridors", "5");
    let cache = dir.path().join("cache");
    let summary = dir.path().join("caches.json");
    let out = navfidelity(&[
        "cache-distances",
        "--graph",
        "corridors",
        "--connectivity",
        s(dir.path()),
        "--cache-dir",
        s(&cache),
        "--out",
        s(&summary),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(cache.join("corridors.navdist").exists());
    assert_eq!(json(&summary)[0]["nodes"], 15);
}

#[test]
fn unknown_flag_is_fatal_and_help_lists_flags() {
    let out = navfidelity(&["eval", "--no-such-flag"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--no-such-flag"));
    let out = navfidelity(&["eval", "--help"]);
    assert!(out.status.success());
    let help = String::from_utf8_lossy(&out.stdout);
    for flag in [
        "--episodes",
        "--predictions",
        "--out",
        "--format",
        "--strict",
        "--per-episode",
        "--connectivity",
        "--cache-dir",
        "--success-threshold",
        "--decay-threshold",
        "--workers",
    ] {
        assert!(help.contains(flag), "missing {flag}");
    }
}

#[test]
fn invalid_threshold_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), "line", "5");
    let out = navfidelity(&[
        "stats",
        "--episodes",
        s(&dir.path().join("episodes.json")),
        "--connectivity",
        s(dir.path()),
        "--out",
        s(&dir.path().join("x.json")),
    ]);
    assert!(out.status.success());
    let out = navfidelity(&[
        "compose",
        "--episodes",
        s(&dir.path().join("episodes.json")),
        "--connectivity",
        s(dir.path()),
        "--join-threshold",
        "-1",
        "--out",
        s(&dir.path().join("y.json")),
    ]);
    assert!(!out.status.success());
}
