use std::path::PathBuf;

use oho_resilience::scenario::{
    emit_csv, load_scenario, metrics_header, resolve_seed, run_experiment, Phase, RunStatus, ScenarioConfig,
};
use oho_resilience::Error;
use serde_json::json;

fn replica_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/paper_replica.json")
}

/// Three robots close together, every robot sees the whole team.
fn small(iterations: usize, failures: serde_json::Value) -> ScenarioConfig {
    let doc = json!({
        "name": "small",
        "team": {
            "robots": 3,
            "delta": 0.7,
            "positions": [[0.0, 0.0], [0.3, 0.0], [0.6, 0.0]],
            "gamma": [[1, 0, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 1, 0, 0]]
        },
        "failures": failures,
        "iterations": iterations,
        "seed": 5
    });
    ScenarioConfig::from_json(&doc.to_string()).unwrap()
}

#[test]
fn without_failures_the_team_only_monitors() {
    let log = run_experiment(&small(80, json!([]))).unwrap();
    assert_eq!(log.status, RunStatus::Completed);
    assert_eq!(log.records.len(), 80);
    assert!(log.records.iter().all(|r| r.phase == Phase::Monitoring));
    assert!(log.records.iter().all(|r| r.edges == vec![(0, 1), (0, 2), (1, 2)]));
    assert_eq!(log.topology.len(), 1);
    assert!(log.records.iter().all(|r| r.min_eig.iter().all(|&l| l > 1e-6)));
}

#[test]
fn catastrophic_failure_stops_the_run() {
    let log = run_experiment(&small(50, json!([{"iteration": 20, "robot": 0, "resource": 0}]))).unwrap();
    assert_eq!(log.status, RunStatus::Catastrophic { iteration: 20 });
    assert_eq!(log.records.len(), 19);
    assert_eq!(log.failures.len(), 1);
    assert!(log.failures[0].cost.is_none());
}

#[test]
fn zero_iterations_write_header_only_metrics() {
    let log = run_experiment(&small(0, json!([]))).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_csv(&log, dir.path()).unwrap();
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics, format!("{}\n", metrics_header(3)));
    let events = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert_eq!(events.lines().count(), 1);
}

#[test]
fn replica_writes_six_events_and_consistent_flip_counts() {
    let cfg = load_scenario(replica_path()).unwrap();
    let log = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_csv(&log, dir.path()).unwrap();
    let events = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert_eq!(events.lines().count(), 7);
    let last = log.records.last().unwrap();
    assert_eq!(last.cumulative_flips, log.total_flips());
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().next().unwrap().split(',').count(), 3 + 9 * 7);
    // monitoring rows always have a one-hop observable team
    for r in log.records.iter().filter(|r| r.phase == Phase::Monitoring) {
        let mid = cfg.failures.iter().any(|f| f.iteration == r.iter);
        if !mid {
            assert!(r.min_eig.iter().all(|&l| l > 1e-8), "iteration {}", r.iter);
        }
    }
}

#[test]
fn invalid_scenarios_name_the_offending_field() {
    let cases = [
        (
            json!({"team": {"robots": 2, "delta": 1.0, "positions": [[0.0, 0.0]], "gamma": [[1,0,0,0,0],[1,0,0,0,0]]}, "iterations": 1, "seed": 0}),
            "team.positions",
        ),
        (
            json!({"team": {"robots": 2, "delta": 1.0, "positions": [[0.0, 0.0], [1.0, 0.0]], "gamma": [[1,0,0,0,0],[2,0,0,0,0]]}, "iterations": 1, "seed": 0}),
            "team.gamma[1]",
        ),
        (
            json!({"team": {"robots": 2, "delta": 1.0, "positions": [[0.0, 0.0], [1.0, 0.0]], "gamma": [[1,0,0,0,0],[1,0,0,0,0]]}, "failures": [{"iteration": 1, "robot": 5, "resource": 0}], "iterations": 1, "seed": 0}),
            "failures[0].robot",
        ),
    ];
    for (doc, field) in cases {
        match ScenarioConfig::from_json(&doc.to_string()) {
            Err(Error::Validation { field: f, .. }) => assert!(f.starts_with(field), "{f} vs {field}"),
            other => panic!("expected a validation error on {field}, got {other:?}"),
        }
    }
    assert!(matches!(
        ScenarioConfig::from_json("{\"unknown\": 1}"),
        Err(Error::Parse(_))
    ));
}

#[test]
fn seed_precedence() {
    assert_eq!(resolve_seed(Some(1), Some("2"), 3).unwrap(), 1);
    assert_eq!(resolve_seed(None, Some("2"), 3).unwrap(), 2);
    assert_eq!(resolve_seed(None, None, 3).unwrap(), 3);
    assert!(resolve_seed(None, Some("x"), 3).is_err());
}
