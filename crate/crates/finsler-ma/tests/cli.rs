//! End-to-end tests of the `fma` binary: artifact layout, exit-status
//! contract, flag precedence, dot-path overrides, and bitwise determinism
//! of reruns at a fixed thread count.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fma() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fma"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run_to_dir(config: &Path, out: &Path, extra: &[&str]) -> Output {
    fma()
        .arg("run")
        .arg(config)
        .arg("--output")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

const NORM_IDENTITIES: &str = r#"
scenario = "norm_identities"
seed = 5

[norm]
family = "pnorm"
p = 3.0
"#;

#[test]
fn run_writes_the_artifact_set_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", NORM_IDENTITIES);
    let out_dir = tmp.path().join("out");
    let output = run_to_dir(&config, &out_dir, &[]);
    assert!(output.status.success(), "{output:?}");

    // One summary line per check plus the closing status line.
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 7);
    assert!(stdout.contains("all checks passed"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"], "norm_identities");
    assert_eq!(report["seed"], 5);
    assert_eq!(report["all_pass"], true);
    assert_eq!(report["reports"].as_array().unwrap().len(), 7);

    let checks = fs::read_to_string(out_dir.join("checks.csv")).unwrap();
    assert!(checks.starts_with("name,relation,lhs,rhs,abs_err,rel_err,tol,pass"));
    assert_eq!(checks.lines().count(), 8);
    assert!(out_dir.join("summary.txt").exists());
}

#[test]
fn identical_config_and_seed_reproduce_reports_bitwise() {
    let tmp = tempfile::tempdir().unwrap();
    // A solver scenario: exercises the parallel Sinkhorn sweeps, the
    // quadratures, and the conjugate — the paths where nondeterminism
    // could hide.
    let config = write_config(
        tmp.path(),
        "solve.toml",
        r#"
scenario = "solve_and_verify"
seed = 9

[norm]
family = "euclidean"

[resolution]
grid_h = 0.1
target_nodes = 300
"#,
    );
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    let run_a = run_to_dir(&config, &out_a, &["--threads", "2"]);
    let run_b = run_to_dir(&config, &out_b, &["--threads", "2"]);
    assert!(run_a.status.success(), "{run_a:?}");
    assert!(run_b.status.success(), "{run_b:?}");
    for file in ["report.json", "checks.csv", "plot_boundary_trace.csv", "plot_map.csv"] {
        let a = fs::read(out_a.join(file)).unwrap();
        let b = fs::read(out_b.join(file)).unwrap();
        assert!(a == b, "{file} differs between identical runs");
    }
}

#[test]
fn seed_flag_overrides_the_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", NORM_IDENTITIES);
    let out_dir = tmp.path().join("out");
    let output = run_to_dir(&config, &out_dir, &["--seed", "123"]);
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 123);
}

#[test]
fn output_dir_falls_back_to_the_environment_variable() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", NORM_IDENTITIES);
    let env_dir = tmp.path().join("from-env");
    let output = fma()
        .arg("run")
        .arg(&config)
        .env("FMA_OUTPUT_DIR", &env_dir)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    assert!(env_dir.join("report.json").exists());
}

#[test]
fn overrides_reach_the_scenario_and_failures_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "wulff.toml",
        r#"
scenario = "wulff_identities"

[norm]
family = "euclidean"

[resolution]
grid_h = 0.03125
"#,
    );
    // At h = 1/8 the radial-path quadratures sit well above their 1e-3
    // tolerances: the run must report failures and exit 1.
    let out_dir = tmp.path().join("coarse");
    let output = run_to_dir(
        &config,
        &out_dir,
        &["--override", "resolution.grid_h=0.125"],
    );
    assert_eq!(output.status.code(), Some(1), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("[FAIL]"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["all_pass"], false);
}

#[test]
fn scenario_errors_still_write_a_report_and_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    // converse without a [domain] is a scenario-level error.
    let config = write_config(
        tmp.path(),
        "converse.toml",
        r#"
scenario = "converse"

[norm]
family = "euclidean"
"#,
    );
    let out_dir = tmp.path().join("out");
    let output = run_to_dir(&config, &out_dir, &[]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["all_pass"], false);
    assert!(report["error"].as_str().unwrap().contains("non-Wulff"));
}

#[test]
fn config_parse_errors_exit_two_with_a_named_field() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "broken.toml",
        "scenario = \"norm_identities\"\nnorrm = 3\n",
    );
    let output = run_to_dir(&config, &tmp.path().join("out"), &[]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("norrm"), "{stderr}");
}

#[test]
fn plot_data_files_match_their_scenarios() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "study.toml",
        r#"
scenario = "convergence_study"

[norm]
family = "euclidean"
"#,
    );
    let out_dir = tmp.path().join("study");
    let output = run_to_dir(&config, &out_dir, &[]);
    assert!(output.status.success(), "{output:?}");
    let table = fs::read_to_string(out_dir.join("plot_convergence_table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("h,rms,sup,order"));
    assert_eq!(lines.count(), 3);

    let config = write_config(
        tmp.path(),
        "wulff.toml",
        r#"
scenario = "wulff_identities"

[norm]
family = "euclidean"

[resolution]
grid_h = 0.03125
"#,
    );
    let out_dir = tmp.path().join("wulff");
    let output = run_to_dir(&config, &out_dir, &[]);
    assert!(output.status.success(), "{output:?}");
    let trace = fs::read_to_string(out_dir.join("plot_boundary_trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("arc_length,u,h_of_grad"));
    // The radial solution vanishes on the boundary: u column ≈ 0.
    for line in lines {
        let u: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(u.abs() <= 1e-9, "boundary u = {u}");
    }
}
