//! Binary-level contract: exit codes, catalog, flag handling, determinism
//! of the written reports.

use std::path::Path;
use std::process::Command;

fn creep(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_creep"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn golden_path(name: &str) -> String {
    format!("{}/../../golden/{name}.toml", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn the_catalog_lists_every_scenario_with_a_description() {
    let (code, out, _) = creep(&["list-golden"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.len() >= 10, "only {} catalog lines", lines.len());
    for line in &lines {
        assert!(line.contains("paths"), "no path budget in {line:?}");
        assert!(line.contains("expected"), "no expected value in {line:?}");
    }
    assert!(out.contains("stable_half_inverse_square"));
    assert!(out.contains("tanaka_reversal"));
}

#[test]
fn failure_modes_get_distinct_exit_codes() {
    let (code, _, err) = creep(&["compare", "--scenario", "no_such_thing"]);
    assert_eq!(code, 4, "{err}");

    let (code, _, err) = creep(&["simulate", "--scenario", "gamma_level", "--paths", "0"]);
    assert_eq!(code, 3, "{err}");

    let (code, _, _) = creep(&["simulate"]);
    assert_eq!(code, 3, "missing selector");

    let (code, _, _) = creep(&["quadrature", "--scenario", "ou_creep_band"]);
    assert_eq!(code, 3, "no quadrature route for mean-reversion scenarios");

    let (code, _, _) = creep(&["compare", "--no-such-flag"]);
    assert_eq!(code, 3, "usage errors share the config code");

    let (code, _, _) = creep(&["--help"]);
    assert_eq!(code, 0);

    // Compound-Poisson marginals have no renewal-density closed form, so the
    // quadrature route must fail loudly rather than approximate.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cp.toml");
    std::fs::write(
        &cfg,
        r#"
name = "cp_quadrature_probe"
anchor = "compound-Poisson marginal has no quadrature route"
kind = "curve_compare"
n_paths = 100
seed = 1
horizon = 5.0

[process]
coupling = "time_and_process"

[process.z]
drift = 0.5
jumps = { kind = "compound_poisson", rate = 1.0, sizes = { dist = "exponential", rate = 1.0 } }

[curve]
curve = "constant"
level = 1.0
"#,
    )
    .unwrap();
    let (code, _, err) = creep(&["quadrature", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 5, "{err}");

    let (code, _, _) = creep(&["compare", "--config", "/definitely/not/here.toml"]);
    assert_eq!(code, 3);
}

#[test]
fn reports_are_byte_identical_across_reruns_and_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |dir: &Path, workers: &str| {
        vec![
            "compare".to_string(),
            "--scenario".into(),
            "gamma_level".into(),
            "--paths".into(),
            "2000".into(),
            "--workers".into(),
            workers.into(),
            "--format".into(),
            "csv".into(),
            "--out-dir".into(),
            dir.to_str().unwrap().into(),
        ]
    };
    let run = |dir: &Path, workers: &str| {
        let owned = args(dir, workers);
        let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
        let (code, _, err) = creep(&refs);
        assert_eq!(code, 0, "{err}");
    };
    run(a.path(), "1");
    run(b.path(), "3");
    assert_eq!(
        read(a.path(), "gamma_level.summary.json"),
        read(b.path(), "gamma_level.summary.json")
    );
    assert_eq!(
        read(a.path(), "gamma_level.outcomes.csv"),
        read(b.path(), "gamma_level.outcomes.csv")
    );
}

#[test]
fn a_config_file_and_its_golden_name_run_identically() {
    let path = golden_path("gamma_level");
    let (code_a, out_a, _) =
        creep(&["simulate", "--scenario", "gamma_level", "--paths", "500"]);
    let (code_b, out_b, _) = creep(&["simulate", "--config", &path, "--paths", "500"]);
    assert_eq!(code_a, 0);
    assert_eq!(code_b, 0);
    assert_eq!(out_a, out_b);
}

#[test]
fn flag_overrides_are_recorded_in_the_report() {
    let (code, out, _) = creep(&[
        "simulate",
        "--scenario",
        "gamma_level",
        "--paths",
        "300",
        "--seed",
        "42",
        "--eps",
        "0.01",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["n_paths"], 300);
    assert_eq!(v["seed"], 42);
    assert_eq!(v["eps"], 0.01);
    assert_eq!(v["mc"]["n_paths"], 300);
}

#[test]
fn the_outcome_dump_has_one_row_per_path() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = creep(&[
        "simulate",
        "--scenario",
        "constant_driftless",
        "--paths",
        "50",
        "--format",
        "csv",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = String::from_utf8(read(dir.path(), "constant_driftless.outcomes.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "path,outcome,t,y,z");
    assert_eq!(lines.len(), 51);
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 5, "malformed row {line:?}");
    }
}

#[test]
fn quadrature_reports_the_value_without_sampling() {
    let (code, out, err) = creep(&["quadrature", "--scenario", "bm_ladder_inverse"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let value = v["analytic"]["value"].as_f64().unwrap();
    assert!((value - 1.0 / 3.0).abs() < 1e-6, "value {value}");
    assert!(v.get("mc").is_none(), "quadrature must not sample");
}

#[test]
fn simulate_stays_verdict_free_and_compare_judges() {
    let (code, out, _) =
        creep(&["simulate", "--scenario", "gamma_level", "--paths", "400"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v.get("comparison").is_none());

    let (code, out, err) =
        creep(&["compare", "--scenario", "gamma_level", "--paths", "4000"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["comparison"]["verdict"], "agree");
    assert_eq!(v["exit_code"], 0);
}
