use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_landscape"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const CONSTANT: &str = r#"
[grid]
dim = 1
extent = [16]
topology = "box"

[coefficients]
source = "constant"
value = 2.0
"#;

#[test]
fn landscape_of_constant_potential_sits_near_inverse_potential() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["landscape"], CONSTANT, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("out/landscape.json"));
    // Dirichlet boundary pulls u below 1/V near the ends only.
    assert!((summary["max_u"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert_eq!(summary["floor"]["pass"], true);
    assert_eq!(fs::read_to_string(dir.path().join("out/config.toml")).unwrap(), CONSTANT);
}

#[test]
fn verify_reports_every_check_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[grid]
dim = 1
extent = [48]

[coefficients]
source = "uniform"
seed = 5
v_bar = 4.0

[verify]
delta = 0.05
"#;
    let out = run(&["verify"], cfg, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let checks = read_json(&dir.path().join("out/checks.json"));
    let reports = checks["reports"].as_array().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    for r in reports {
        assert!(stdout.contains(&format!(" {}:", r["name"].as_str().unwrap())));
    }
    assert!(stdout.contains("checks:"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{CONSTANT}\n[verify]\ndelta = 0.1\nmystery = 3\n");
    let out = run(&["verify"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(read_json(&dir.path().join("out/error.json"))["tag"], "ConfigParse");
}

#[test]
fn missing_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ensemble"], CONSTANT, dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn computation_error_writes_tag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CONSTANT.replace("value = 2.0", "value = 0.0");
    let out = run(&["landscape"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = read_json(&dir.path().join("out/error.json"));
    assert_eq!(err["tag"], "DegeneratePotential");
}

const ENSEMBLE: &str = r#"
[ensemble]
sizes = [16, 32, 64]
realizations = 3
seed_base = 7
"#;

#[test]
fn ensemble_outputs_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(&["ensemble", "--threads", "1"], ENSEMBLE, a.path()).status.code(), Some(0));
    assert_eq!(run(&["ensemble", "--threads", "3"], ENSEMBLE, b.path()).status.code(), Some(0));
    for f in ["records.csv", "summary.json", "config.toml"] {
        assert_eq!(
            fs::read(a.path().join("out").join(f)).unwrap(),
            fs::read(b.path().join("out").join(f)).unwrap(),
            "{f}"
        );
    }
    let records = fs::read_to_string(a.path().join("out/records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 9);
    assert!(records.lines().nth(1).unwrap().starts_with("7,16,"));
}

#[test]
fn seed_base_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ensemble", "--seed-base", "100"], ENSEMBLE, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let records = fs::read_to_string(dir.path().join("out/records.csv")).unwrap();
    let seeds: Vec<&str> = records.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(&seeds[..3], ["100", "101", "102"]);
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = r#"
[grid]
dim = 2
extent = [6, 6]

[coefficients]
source = "bernoulli"
seed = 2
v_high = 4.0
prob = 0.3

[eigs]
count = 4
localized = true

[wells]
delta = 0.1
"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(&["eigs"], cfg, a.path()).status.code(), Some(0));
    assert_eq!(run(&["eigs"], cfg, b.path()).status.code(), Some(0));
    for f in ["eigenvalues.csv", "eigenvectors.csv", "localized_eigenvalues.csv", "partition.csv"] {
        assert_eq!(
            fs::read(a.path().join("out").join(f)).unwrap(),
            fs::read(b.path().join("out").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn agmon_distance_vanishes_on_sources() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{CONSTANT}\n[agmon]\nmu = 0.0\nsources = [3, 40]\n");
    let out = run(&["agmon"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/agmon.csv")).unwrap();
    let h: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(h[3], 0.0);
    assert_eq!(h[40], 0.0);
    assert!(h.iter().enumerate().all(|(i, &x)| x > 0.0 || i == 3 || i == 40));
}
