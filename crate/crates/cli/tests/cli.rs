use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_majority-sbm"))
        .args(args)
        .output()
        .expect("spawn binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_csv() {
    let out = run(&[
        "simulate", "--model", "markovian", "--n", "20", "--delta", "2", "--p", "0.5", "--q",
        "0.3", "--replicates", "40", "--seed", "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("model,n,delta,p,q,L,replicates,master_seed,"));
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&row[..8], &["markovian", "20", "2", "0.5", "0.3", "", "40", "5"]);
    let total: u64 = row[8..12].iter().map(|x| x.parse::<u64>().unwrap()).sum();
    assert_eq!(total, 40);
}

#[test]
fn simulate_from_l_and_json() {
    let out = run(&[
        "simulate", "--model", "non-markovian", "--n", "500", "--L", "0", "--p", "1", "--q",
        "0.3", "--replicates", "5", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v[0]["delta"], 1167);
    assert_eq!(v[0]["plus_wins"], 5);
    assert_eq!(v[0]["avg_last_day"], 2.0);
}

#[test]
fn simulate_spec_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"variant":"markovian","n":15,"delta_rule":{"explicit":1},
            "params":{"p":0.5,"q":0.3},"replicates":30,"max_rounds":100000,"master_seed":11}"#,
    )
    .unwrap();
    let from_file = run(&["simulate", "--spec", spec.to_str().unwrap()]);
    let from_flags = run(&[
        "simulate", "--model", "markovian", "--n", "15", "--delta", "1", "--p", "0.5", "--q",
        "0.3", "--replicates", "30", "--seed", "11",
    ]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flags.stdout);
}

#[test]
fn exit_codes() {
    // validation
    let bad_p = run(&["simulate", "--model", "markovian", "--n", "5", "--delta", "1", "--p", "1.5", "--q", "0.3"]);
    assert_eq!(bad_p.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_p.stderr).contains("p"));
    assert_eq!(run(&["table", "T7"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--model", "markovian", "--n", "5"]).status.code(), Some(1));
    let too_negative = run(&["simulate", "--model", "markovian", "--n", "5", "--delta", "-6", "--p", "0.5", "--q", "0.3"]);
    assert_eq!(too_negative.status.code(), Some(1));
    assert_eq!(run(&["oracle", "--n", "3", "--delta", "2", "--p", "0.5", "--q", "0.5"]).status.code(), Some(1));

    // i/o
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope/out.csv");
    let out = run(&[
        "simulate", "--model", "markovian", "--n", "3", "--delta", "1", "--p", "0.5", "--q", "0.3",
        "--replicates", "2", "--out", missing.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
    let absent_spec = dir.path().join("absent.json");
    assert_eq!(run(&["simulate", "--spec", absent_spec.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn table_writes_file_and_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, workers) in [(&a, "1"), (&b, "3")] {
        let out = run(&[
            "table", "T6", "--replicates", "4", "--seed", "42", "--workers", workers, "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(&a).unwrap();
    assert_eq!(a, std::fs::read(&b).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().last().unwrap().starts_with("non-markovian,500,111,0.5,0.3,4,4,42,"));
}

#[test]
fn scan_json_reports_crossing() {
    let out = run(&[
        "scan", "--n", "60", "--p", "1", "--q", "0.3", "--L-values", "0,4", "--replicates", "20",
        "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[0]["L"], 0.0);
    assert_eq!(points[0]["report"]["plus_wins"], 20);
    assert_eq!(points[1]["report"]["plus_wins"], 0);
    assert_eq!(v["crossing"], serde_json::json!([0.0, 4.0]));

    let out = run(&[
        "scan", "--n", "60", "--p", "1", "--q", "0.3", "--L-from", "0", "--L-to", "1",
        "--L-step", "0.5", "--replicates", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 4);
}

#[test]
fn analytic_subcommands() {
    let out = run(&["oracle", "--n", "1", "--delta", "1", "--p", "0.5", "--q", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["absorption"]["prob_plus_wins"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(v["halt_day1"], 0.25);
    assert_eq!(v["kernel"].as_array().unwrap().len(), 4);

    let out = run(&["constants", "--p", "0.5", "--q", "0.3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let h = v["H"].as_f64().unwrap();
    assert!((2.581..=2.583).contains(&h));

    let out = run(&["thresholds", "--n", "500", "--p", "0.5", "--q", "0.3", "--regime", "experiment", "--L", "4"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["delta"], 111);

    let out = run(&["thresholds", "--n", "500", "--p", "0.5", "--q", "0.3", "--regime", "unit-halt", "--L", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["thresholds", "--n", "500", "--p", "0.5", "--q", "0.3", "--regime", "second-day"]);
    assert_eq!(out.status.code(), Some(1));
}
