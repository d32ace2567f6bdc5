use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_warpgeom")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str], out: &Path) -> (i32, String, Vec<u8>) {
    let o = Command::new(bin()).args(args).arg("--out").arg(out).output().unwrap();
    let report = std::fs::read(out.join("report.json")).unwrap_or_default();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned(), report)
}

#[test]
fn s1_full_suite_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("s1_kenmotsu.cfg");
    let c = cfg.to_str().unwrap();
    let (code, stdout, first) = run(&["analyze", "--config", c], &dir.path().join("a"));
    assert_eq!(code, 0, "{stdout}");
    let (code2, _, second) = run(&["analyze", "--config", c], &dir.path().join("b"));
    assert_eq!(code2, 0);
    assert!(!first.is_empty());
    assert_eq!(first, second, "reports differ between identical runs");

    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["engine"], "warpgeom");
    assert_eq!(v["seed"], 20240611);
    assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 13);
    for c in checks {
        let status = c["metadata"]["status"].as_str().unwrap();
        assert!(status == "pass" || status == "skipped", "{}: {status}", c["name"]);
        if status == "skipped" {
            assert!(c["records"][0]["note"].as_str().is_some_and(|n| !n.is_empty()));
        }
    }

    let (_, _, other_seed) = run(&["analyze", "--config", c, "--seed", "99"], &dir.path().join("c"));
    assert_ne!(first, other_seed);
    let w: serde_json::Value = serde_json::from_slice(&other_seed).unwrap();
    assert_eq!(w["seed"], 99);
}

#[test]
fn tolerance_squeeze_fails_with_named_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("s1_kenmotsu.cfg");
    let (code, stdout, report) =
        run(&["check", "all", "--config", cfg.to_str().unwrap(), "--tol-identity", "1e-15", "--tol-ineq", "1e-15"], dir.path());
    assert_eq!(code, 1, "{stdout}");
    assert!(stdout.contains("FAILED"), "{stdout}");
    let v: serde_json::Value = serde_json::from_slice(&report).unwrap();
    assert_eq!(v["exit_code"], 1);
}

#[test]
fn unknown_check_and_bad_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("s1_kenmotsu.cfg");
    let c = cfg.to_str().unwrap();
    assert_eq!(run(&["check", "no_such_check", "--config", c], dir.path()).0, 2);
    assert_eq!(run(&["sweep", "--param", "theta", "--values", "", "--config", c], dir.path()).0, 2);
    assert_eq!(run(&["sweep", "--param", "colour", "--values", "1", "--config", c], dir.path()).0, 2);
    assert_eq!(run(&["analyze"], dir.path()).0, 2);

    let src = std::fs::read_to_string(&cfg).unwrap();
    for (from, to) in [("seed = 20240611", "# no seed"), ("theta = 1.0471975512", "theta = 2.0")] {
        let bad = dir.path().join("bad.cfg");
        std::fs::write(&bad, src.replace(from, to)).unwrap();
        let o = Command::new(bin()).args(["validate", "--config", bad.to_str().unwrap()]).output().unwrap();
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains("validation error"));
    }
}

#[test]
fn selected_checks_pull_in_prerequisites() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("s1_kenmotsu.cfg");
    let (code, _, report) = run(&["check", "inequality_4_1", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_slice(&report).unwrap();
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["validate_structure", "certify_warped", "semi_slant_check", "inequality_4_1"]);
}

#[test]
fn theta_sweep_reports_coefficients_with_one_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("s1_kenmotsu.cfg");
    let args = ["sweep", "--param", "theta", "--values", "pi/6, pi/4, pi/3", "--config", cfg.to_str().unwrap()];
    let (code, stdout, report) = run(&args, &dir.path().join("a"));
    assert_eq!(code, 0, "{stdout}");
    let v: serde_json::Value = serde_json::from_slice(&report).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let expected = [26.0 / 3.0, 38.0 / 9.0, 74.0 / 27.0];
    for (row, e) in rows.iter().zip(expected) {
        assert!((row["coefficient"].as_f64().unwrap() - e).abs() < 1e-12);
        assert_eq!(row["seed"], 20240611);
        assert_eq!(row["exit_code"], 0);
    }
    assert!(v["notes"][0].as_str().unwrap().contains("decreases"));
    let (_, _, again) = run(&args, &dir.path().join("b"));
    assert_eq!(report, again);
}

#[test]
fn perturbed_and_candidate_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    for (file, must_run) in [
        ("s1_perturbed.cfg", "inequality_5_1"),
        ("xi_second_factor_kenmotsu.cfg", "theorem_3_1"),
        ("slant_first_sasakian.cfg", "theorem_3_2"),
    ] {
        let cfg = scenario(file);
        let (code, stdout, report) = run(&["analyze", "--config", cfg.to_str().unwrap()], &dir.path().join(file));
        assert_eq!(code, 0, "{file}: {stdout}");
        let v: serde_json::Value = serde_json::from_slice(&report).unwrap();
        let check = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == must_run).unwrap();
        assert_eq!(check["metadata"]["status"], "pass", "{file}");
    }
}

#[test]
fn estimate_ab_reports_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("slant_first_sasakian.cfg");
    let (code, _, report) = run(&["estimate-ab", "--config", cfg.to_str().unwrap(), "--samples", "120"], dir.path());
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_slice(&report).unwrap();
    let fit = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "alpha_beta").unwrap();
    assert!((fit["metadata"]["alpha"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(fit["metadata"]["beta"].as_f64().unwrap().abs() < 1e-6);
}
