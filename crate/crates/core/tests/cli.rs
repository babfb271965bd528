use std::path::{Path, PathBuf};
use std::process::Command;

use adtplan::cli::{run, EXIT_FAILURE, EXIT_INVALID, EXIT_NOT_CERTIFIED, EXIT_OK};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("adtplan").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn value<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(',')))
        .unwrap_or_else(|| panic!("no {key} in\n{stdout}"))
}

fn example1() -> String {
    scenarios().join("example1.scenario").display().to_string()
}

#[test]
fn quantile_reports_median() {
    let (code, out, _) = call(&["quantile", "--scenario", &example1()]);
    assert_eq!(code, EXIT_OK);
    let t: f64 = value(&out, "t_alpha").parse().unwrap();
    assert!((t - 1.5838873865).abs() < 1e-8);
    assert!(value(&out, "elapsed_ms").parse::<u64>().is_ok());
}

#[test]
fn optimize_time_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let (code, out, _) = call(&["optimize-time", "--scenario", &example1(), "--out", p.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(value(&out, "certified"), "true");
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("t,weight,sensitivity,saturated\n"));
    let d = adtplan::csvio::read_design_csv(&text).unwrap();
    assert_eq!(d.len(), 6);
}

#[test]
fn exact_rounding_is_reported() {
    let (code, out, _) = call(&["optimize-time", "--scenario", &example1(), "--exact", "--out", "/dev/null"]);
    assert_eq!(code, EXIT_OK);
    let eff: f64 = value(&out, "exact_efficiency").parse().unwrap();
    assert!(eff > 0.0 && eff <= 1.0 + 1e-12);
}

#[test]
fn iteration_budget_exhaustion_is_flagged() {
    let (code, out, _) = call(&["optimize-time", "--scenario", &example1(), "--max-iters", "2", "--out", "/dev/null"]);
    assert_eq!(code, EXIT_NOT_CERTIFIED);
    assert_eq!(value(&out, "certified"), "false");
}

#[test]
fn destructive_plan_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("z.csv");
    let (code, out, _) = call(&["optimize-destructive", "--scenario", &example1(), "--out", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(value(&out, "closed_form"), "true");
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("x,t,weight\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn efficiency_and_check_of_shipped_design() {
    let tau0 = scenarios().join("tau0.csv").display().to_string();
    let (code, out, _) = call(&["efficiency", "--scenario", &example1(), "--design", &tau0]);
    assert_eq!(code, EXIT_OK);
    let e: f64 = value(&out, "efficiency").parse().unwrap();
    assert!(e > 0.9 && e < 1.0);
    let (code, out, _) = call(&["check", "--scenario", &example1(), "--design", &tau0]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(value(&out, "design_is_optimal"), "false");
    assert_eq!(value(&out, "efficiency").parse::<f64>().unwrap(), e);
}

#[test]
fn sweep_to_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    let sc = scenarios().join("sweep_sigma_ratio.scenario").display().to_string();
    let (code, out, _) = call(&["sweep", "--scenario", &sc, "--n", "9", "--out", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(value(&out, "rows"), "9");
    let rows: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(rows.len(), 9);
}

#[test]
fn invalid_scenario_lists_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.scenario");
    let text = std::fs::read_to_string(example1()).unwrap().replace("rho = -0.143", "rho = 1.5");
    std::fs::write(&p, text).unwrap();
    let (code, _, err) = call(&["check", "--scenario", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("model.rho"), "{err}");
}

#[test]
fn k_one_warns() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("k1.scenario");
    let text = std::fs::read_to_string(example1()).unwrap().replace("k = 6", "k = 1");
    std::fs::write(&p, text).unwrap();
    let (code, out, _) = call(&["check", "--scenario", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(value(&out, "warning").contains("identifiable"));
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(call(&["optimize-time"]).0, EXIT_INVALID);
    assert_eq!(call(&["quantile", "--scenario", &example1(), "--alpha", "x"]).0, EXIT_INVALID);
    let (code, _, err) = call(&["quantile", "--scenario", "/nonexistent/x.scenario"]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(!err.is_empty());
}

#[test]
fn binary_matches_library_entry_point() {
    let out = Command::new(env!("CARGO_BIN_EXE_adtplan"))
        .args(["quantile", "--scenario", &example1()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(value(&stdout, "t_alpha"), value(&call(&["quantile", "--scenario", &example1()]).1, "t_alpha"));
    let bad = Command::new(env!("CARGO_BIN_EXE_adtplan")).arg("nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_INVALID));
}
