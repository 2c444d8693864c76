use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_covert-route"));
    c.env_remove("COVERT_ROUTE_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> String {
    let out = dir.join(name).to_string_lossy().into_owned();
    let mut args = vec!["gen", "--out", &out];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), out);
    out
}

#[test]
fn gen_is_deterministic_and_feeds_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let flags = ["--seed", "7", "--nodes", "30", "--wardens", "30", "--dim", "100", "--alpha", "3"];
    let a = gen(dir.path(), "a.json", &flags);
    let b = gen(dir.path(), "b.json", &flags);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let o = run(&["snapshot", "--scenario", &a, "--delta", "0.05", "--regime", "all", "--n", "10000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for regime in ["[mt-sk]", "[md-sk]", "[mt-ik]", "[md-ik]"] {
        assert!(text.contains(regime), "{text}");
    }
    assert_eq!(text.matches("D_exact ≤ δ: PASS").count(), 4, "{text}");
    let rate = |tag: &str| -> f64 {
        let block = &text[text.find(tag).unwrap()..];
        let line = block.lines().find(|l| l.starts_with("rate: ")).unwrap();
        line["rate: ".len()..].trim_end_matches("/√n").parse().unwrap()
    };
    assert!(rate("[mt-ik]") >= rate("[mt-sk]"));
}

#[test]
fn alpha_below_two_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = run(&["gen", "--alpha", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha < 2"));
    assert!(!out.exists());
}

#[test]
fn two_node_scenario_routes_directly() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen(dir.path(), "two.json", &["--nodes", "0", "--wardens", "3"]);
    let csv = dir.path().join("snap.csv");
    let o = run(&["snapshot", "--scenario", &s, "--regime", "mt-sk", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("path: 0-1, hops: 1"), "{text}");
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 2);
    assert!(rows.lines().nth(1).unwrap().starts_with("mt-sk,0-1,"));
}

#[test]
fn warden_free_scenario_warns() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen(dir.path(), "free.json", &["--nodes", "4", "--wardens", "0"]);
    let o = run(&["snapshot", "--scenario", &s, "--regime", "md-ik"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("warning: scenario has no wardens"));
    assert!(text.contains("unconstrained"));
}

#[test]
fn bad_inputs_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen(dir.path(), "s.json", &["--nodes", "3", "--wardens", "2"]);
    let out = dir.path().join("o.csv");
    let out = out.to_str().unwrap();
    for args in [
        vec!["snapshot", "--scenario", &s, "--regime", "fast"],
        vec!["snapshot", "--scenario", &s, "--delta", "-1"],
        vec!["snapshot", "--scenario", "/nonexistent/s.json"],
        vec!["sweep", "--axis", "beta", "--values", "1", "--out", out],
        vec!["sweep", "--axis", "delta", "--values", "0.1,0.01", "--out", out],
        vec!["sweep", "--axis", "delta", "--values", "0.01", "--trials", "0", "--out", out],
        vec!["verify", "--size-cap", "13"],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_writes_raw_and_summary_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "sweep".to_owned(),
            "--axis".into(),
            "delta".into(),
            "--values".into(),
            "0.01:0.1:10".into(),
            "--trials".into(),
            "6".into(),
            "--seed".into(),
            "5".into(),
            "--nodes".into(),
            "12".into(),
            "--wardens".into(),
            "8".into(),
            "--out".into(),
            out.to_string_lossy().into_owned(),
        ]
    };
    assert!(bin().args(args(&a)).env("COVERT_ROUTE_JOBS", "1").status().unwrap().success());
    assert!(bin().args(args(&b)).args(["--jobs", "8"]).status().unwrap().success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let sa = dir.path().join("a.summary.csv");
    assert_eq!(fs::read(&sa).unwrap(), fs::read(dir.path().join("b.summary.csv")).unwrap());

    let summary = fs::read_to_string(&sa).unwrap();
    let rows: Vec<Vec<&str>> = summary.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10 * 4);
    for value_rows in rows.chunks(4) {
        let mean = |regime: &str, col: usize| -> f64 {
            value_rows.iter().find(|r| r[2] == regime).unwrap()[col].parse().unwrap()
        };
        assert!(mean("mt-ik", 3) >= mean("mt-sk", 3));
        assert!(mean("md-ik", 4) <= mean("md-sk", 4));
    }
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 1 + 10 * 4 * 6);
}

#[test]
fn verify_passes_and_catches_perturbation() {
    let o = run(&["verify", "--seed", "3", "--cases", "20", "--size-cap", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("3 suites, 20 cases each: PASS"));

    let o = run(&["verify", "--seed", "40", "--cases", "4", "--inject-perturbation", "1e-7"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("FAIL routing seed 40:"), "{text}");
    assert!(text.contains("3 suites, 4 cases each: FAIL"));
}
