use std::path::Path;
use std::process::{Command, Output};

use npsg::harness::{read_csv, ExperimentConfig};

fn npsg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npsg"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CONFIG: &str = r#"
trials = 3
seed = 2
budget = 3000
sampling = "deterministic"
w0_fill = 1.0
output = "out"
eval = { rule = "geometric", ratio = 1.2 }

[problem]
type = "max-affine"
dimension = 5
pieces = 4
seed = 1

[[solvers]]
kind = "nesterov-psg"

[[solvers]]
kind = "psg"
"#;

#[test]
fn run_writes_outputs_and_rate_fit_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let o = npsg(&["run", cfg.to_str().unwrap(), "--monitors"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("nesterov-psg"));

    let out = dir.path().join("out");
    for f in [
        "config.resolved.toml",
        "trials.csv",
        "averaged.csv",
        "summary.json",
        "monitors.json",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let rows = read_csv(std::fs::File::open(out.join("trials.csv")).unwrap()).unwrap();
    assert!(rows.iter().any(|r| r.solver == "psg" && r.trial == "2"));
    let resolved = ExperimentConfig::load(&out.join("config.resolved.toml")).unwrap();
    assert_eq!(resolved.budget, 3000);

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    let fstar = summary["fstar"].as_f64().unwrap();
    let csv = out.join("averaged.csv");
    let o = npsg(&[
        "rate-fit",
        csv.to_str().unwrap(),
        "--fstar",
        &fstar.to_string(),
        "--window",
        "30",
        "3000",
        "--solver",
        "psg",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("slope -"));

    let o = npsg(&[
        "rate-fit",
        csv.to_str().unwrap(),
        "--fstar",
        "0",
        "--window",
        "1",
        "10",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("npsg: error:"));
}

#[test]
fn validate_schedule_reports_and_exits() {
    let o = npsg(&["validate-schedule", "strong", "100"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("violation at 7 -> 8"));
    assert!(!npsg(&["validate-schedule", "strong", "100", "--strict"])
        .status
        .success());
    let o = npsg(&["validate-schedule", "general", "100000", "--strict"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains(", 0 violations"));
}

#[test]
fn parse_prints_stats() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("d.txt");
    std::fs::write(&f, "+1 1:1 3:2\n-1 2:0.5\n").unwrap();
    let o = npsg(&["parse", f.to_str().unwrap(), "--stats"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["m"], 2);
    assert_eq!(v["dimension"], 3);
    assert_eq!(v["nnz"], 3);
    assert!(!npsg(&["parse", "/nonexistent/file"]).status.success());
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            cfg.validate().unwrap();
            n += 1;
        }
    }
    assert!(n >= 5);
}
