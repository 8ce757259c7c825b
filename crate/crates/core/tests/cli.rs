use std::process::{Command, Output};

fn edgeverse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgeverse"))
        .args(args)
        .output()
        .expect("run edgeverse")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_lists_defaults() {
    let o = edgeverse(&["sweep", "--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for needle in ["[default: 100]", "[default: 20]", "[default: 2 4]", "[default: 1 2 3 4 5]", "[default: 60]"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
    assert!(text.contains("optimal_latency_earning"));
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let o = edgeverse(&["solve", "--strategy", "fastest", "--users", "3", "--servers", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("optimal_latency"), "{err}");
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(edgeverse(&[]).status.code(), Some(1));
    assert_eq!(edgeverse(&["sweep", "--seeds", "x"]).status.code(), Some(1));
}

#[test]
fn no_fallback_above_cap_exits_two() {
    let o = edgeverse(&["solve", "--users", "30", "--servers", "5", "--no-fallback"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generate_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let p = path.to_str().unwrap();
    let o = edgeverse(&["generate", "--users", "5", "--servers", "3", "--seed", "9", "--omega", "3", "--out", p]);
    assert!(o.status.success());
    let s = edgeverse::scenario::load_scenario(&path).unwrap();
    assert_eq!((s.n_users, s.n_servers), (5, 3));
    assert_eq!(s.utility_params.omega, 3.0);

    let o = edgeverse(&["solve", "--scenario", p, "--strategy", "optimal_latency"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["strategy"], "optimal_latency");
    assert_eq!(v["assignment"]["server_of"].as_array().unwrap().len(), 5);
    assert!(v["plan"]["d"].as_array().unwrap().iter().all(|d| d.as_f64() == Some(1.0)));
}

#[test]
fn bad_scenario_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"n_users\": 2}").unwrap();
    let o = edgeverse(&["solve", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_writes_header_and_rows() {
    let o = edgeverse(&[
        "sweep", "--users", "8", "--servers", "3", "--seeds", "2", "--omega", "2", "--dmin", "1", "--dmin", "2",
        "--strategy", "random", "--strategy", "optimal_latency_earning", "--recheck", "8",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), edgeverse::harness::CSV_HEADER);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(rows[0].starts_with("optimal_latency_earning,"));
    assert!(rows[7].starts_with("random,"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS"));
}

#[test]
fn verify_small_suite_passes() {
    let o = edgeverse(&["verify", "--users", "3", "--users", "4", "--servers", "2", "--seeds", "6", "--grid-pairs", "5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).trim_end().ends_with("# overall: PASS"));
}

#[test]
fn verify_oversize_exits_two() {
    let o = edgeverse(&["verify", "--users", "20", "--servers", "3", "--seeds", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
