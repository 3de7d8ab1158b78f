use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_swipt-harq"));
    cmd.env_remove("SWIPT_HARQ_OUT");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn solve_iid_reports_start_value() {
    let out = run(&["solve-iid", "--Ed", "5", "--e", "1", "--R0", "1", "--R1", "10", "--lambda", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("k*(0,0) = 15.9941"), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("b,m_bits,k_star"));
}

#[test]
fn invalid_parameters_exit_with_config_error() {
    let out = run(&["solve-iid", "--Ed", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["solve-iid", "--lambda", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["solve-iid", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["reproduce", "table9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn equal_correlated_rates_match_iid_table() {
    let iid = run(&["solve-iid", "--R0", "3", "--lambda", "0.4"]);
    let corr = run(&["solve-corr", "--R0", "3", "--lambda0", "0.4", "--lambda1", "0.4"]);
    assert_eq!(corr.status.code(), Some(0));
    let a = csv_column(&stdout(&iid), "k_star");
    let b = stdout(&corr);
    let g0: Vec<f64> = csv_column(&b, "k_star")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    // Correlated output lists both previous channel states per lattice point.
    assert!(g0.len() >= a.len());
    let first: f64 = a[0].parse().unwrap();
    assert!(stderr(&corr).contains(&format!("stationary start = {first:.4}")));
}

#[test]
fn simulate_writes_report_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/report.csv");
    let out = run(&[
        "simulate", "--policy", "bf,arq", "--episodes", "500", "--seed", "7", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(csv_column(&text, "policy"), ["BF", "SimpleARQ"]);
    assert_eq!(csv_column(&text, "episodes"), ["500", "500"]);

    let again = dir.path().join("again.csv");
    run(&["simulate", "--policy", "bf,arq", "--episodes", "500", "--seed", "7", "--out", again.to_str().unwrap()]);
    assert_eq!(text, fs::read_to_string(&again).unwrap());
}

#[test]
fn exhausted_slot_cap_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cap.toml");
    fs::write(&cfg, "[defaults]\nslot_cap = 3\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "simulate", "--policy", "bf", "--episodes", "10"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn reproduce_table_without_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce", "table1", "--episodes", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("table1.csv").exists());
    assert!(dir.path().join("table1_long.csv").exists());
    assert!(stdout(&out).contains("PASS"));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn underpowered_reproduction_reports_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce", "table1", "--episodes", "2", "--seed", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn config_sections_and_cli_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[defaults]\nEd = 3\nlambda = 0.5\n\n[solve-iid]\nR0 = 2\nR1 = 4\n").unwrap();
    let from_file = run(&["--config", cfg.to_str().unwrap(), "solve-iid"]);
    assert!(stderr(&from_file).contains("E_d=3, e=1, R0=2, R1=4, λ=0.5"), "{}", stderr(&from_file));
    let overridden = run(&["--config", cfg.to_str().unwrap(), "solve-iid", "--R0", "1"]);
    assert!(stderr(&overridden).contains("E_d=3, e=1, R0=1, R1=4"), "{}", stderr(&overridden));

    fs::write(&cfg, "[defaults]\nbogus = 1\n").unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "solve-iid"]).status.code(), Some(1));
    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["--config", missing.to_str().unwrap(), "solve-iid"]).status.code(), Some(1));
}

fn sweep_in(dir: Option<&Path>, env: Option<&Path>, extra: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.args(["sweep", "--param", "R0", "--values", "1,2,3", "--episodes", "0"]);
    if let Some(d) = dir {
        cmd.args(["--out", d.to_str().unwrap()]);
    }
    if let Some(e) = env {
        cmd.env("SWIPT_HARQ_OUT", e);
    }
    cmd.args(extra).output().unwrap()
}

#[test]
fn output_dir_from_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let out = sweep_in(None, Some(env_dir.path()), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(env_dir.path().join("sweep_R0.csv").exists());

    let flag_dir = tempfile::tempdir().unwrap();
    let out = sweep_in(Some(flag_dir.path()), Some(env_dir.path()), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_dir.path().join("sweep_R0_long.csv").exists());
}

#[test]
fn sweep_renders_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = sweep_in(Some(dir.path()), None, &["--format", "svg"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let svg = fs::read_to_string(dir.path().join("sweep_R0.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    let csv = fs::read_to_string(dir.path().join("sweep_R0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}
