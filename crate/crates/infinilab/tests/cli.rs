//! End-to-end checks of the `infinilab` binary: subcommands, exit codes,
//! artifact layout, environment overrides, and worker-count determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_infinilab"))
}

fn run_ok(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn infinilab");
    assert!(
        out.status.success(),
        "infinilab {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("spawn infinilab");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn metadata(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("metadata.json")).expect("metadata.json");
    serde_json::from_str(&text).expect("valid metadata JSON")
}

#[test]
fn eigen_default_brackets_the_interval_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["eigen", "--out", dir.path().to_str().unwrap()], &[]);

    let meta = metadata(dir.path());
    assert_eq!(meta["command"], "eigen");
    assert_eq!(meta["results"]["resolved"], true);
    let lo = meta["results"]["lambda_lo"].as_f64().unwrap();
    let hi = meta["results"]["lambda_hi"].as_f64().unwrap();
    // Interval of radius 1, normalized operator: the principal eigenvalue is
    // pi^2 / 4.
    let exact = std::f64::consts::PI * std::f64::consts::PI / 4.0;
    assert!(lo <= exact && exact <= hi, "[{lo}, {hi}] misses {exact}");
    assert!(hi - lo <= 0.04 + 1e-12, "bracket wider than requested");

    for name in ["field.csv", "table.csv", "metadata.json"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert!(table.starts_with("lambda,verdict,sweeps\n"));
}

#[test]
fn kpp_default_plateaus_at_carrying_capacity() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["kpp", "--out", dir.path().to_str().unwrap()], &[]);

    let meta = metadata(dir.path());
    assert_eq!(meta["results"]["mode"], "ball");
    assert_eq!(meta["results"]["outcome"], "converged");
    let center = meta["results"]["center_value"].as_f64().unwrap();
    assert!(
        center > 0.95 && center <= 1.0 + 1e-9,
        "center value {center} should sit just under the carrying capacity"
    );
}

#[test]
fn oracle_check_prints_the_error_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&["oracle-check", "--out", dir.path().to_str().unwrap()], &[]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("profile,gamma,h,nodes,sup_error,rel_error"),
        "table header missing from stdout"
    );
    assert!(stdout.contains("worst_rel_error"), "summary JSON missing");

    let meta = metadata(dir.path());
    let worst = meta["results"]["worst_rel_error"].as_f64().unwrap();
    assert!(worst < 0.5, "discretization error table looks wrong: {worst}");
}

#[test]
fn invalid_config_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        r#"
            command = "solve"
            [operator]
            gamma = 7.0
            [problem]
            kind = "dirichlet"
        "#,
    )
    .unwrap();
    let out_dir = dir.path().join("artifacts");
    let (code, stderr) = exit_code(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("gamma"), "stderr should name the bad key: {stderr}");
    assert!(!out_dir.exists(), "validation failures must not write artifacts");
}

#[test]
fn command_config_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("eigen.toml");
    std::fs::write(
        &cfg,
        r#"
            command = "eigen"
            [problem]
            kind = "eigen"
        "#,
    )
    .unwrap();
    let (code, stderr) = exit_code(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2, "stderr: {stderr}");
}

#[test]
fn failed_certificate_exits_4_but_keeps_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    // The absorption strength is valid, but the decay threshold sits below
    // the solver's residual floor (the relaxation stops once c u_+ drops
    // under tol_residual), so the run completes, emits artifacts, and then
    // fails its certificate.
    std::fs::write(
        &cfg,
        r#"
            command = "liouville"
            [domain]
            h = 0.125
            [problem]
            kind = "liouville"
            experiment = "absorption"
            beta = 1.0
            c_value = -9.0
            radius = 4.0
            kappas = [0.0]
            threshold = 1e-10
            seed = { kind = "bump", amp = 1.0, eps = 0.5 }
        "#,
    )
    .unwrap();
    let out_dir = dir.path().join("artifacts");
    let (code, stderr) = exit_code(&[
        "liouville",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 4, "stderr: {stderr}");
    let meta = metadata(&out_dir);
    assert_eq!(meta["results"]["pass"], false);
}

#[test]
fn weak_absorption_certificate_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("weak.toml");
    std::fs::write(
        &cfg,
        r#"
            command = "liouville"
            [domain]
            h = 0.125
            [problem]
            kind = "liouville"
            experiment = "absorption"
            beta = 1.0
            c_value = -5.0
            radius = 4.0
            kappas = [0.0]
        "#,
    )
    .unwrap();
    let (code, stderr) = exit_code(&["liouville", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 4, "stderr: {stderr}");
    assert!(stderr.contains("need -c >="), "stderr: {stderr}");
}

#[test]
fn env_overrides_apply_to_default_runs() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &["solve", "--out", dir.path().to_str().unwrap()],
        &[("INFINILAB_DOMAIN__H", "0.1"), ("INFINILAB_OPERATOR__GAMMA", "1.0")],
    );
    let meta = metadata(dir.path());
    assert_eq!(meta["config"]["domain"]["h"].as_f64(), Some(0.1));
    assert_eq!(meta["config"]["operator"]["gamma"].as_f64(), Some(1.0));
}

#[test]
fn invalid_env_override_exits_2() {
    let mut cmd = bin();
    cmd.args(["solve"]).env("INFINILAB_OPERATOR__GAMMA", "7.0");
    let out = cmd.output().expect("spawn infinilab");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn worker_counts_produce_byte_identical_artifacts() {
    let d1 = tempfile::tempdir().unwrap();
    let d4 = tempfile::tempdir().unwrap();
    // Force the parallel path even on the small default grid.
    let envs = [("INFINILAB_SOLVER__PARALLEL_THRESHOLD", "1")];
    run_ok(
        &["solve", "--out", d1.path().to_str().unwrap(), "--workers", "1"],
        &envs,
    );
    run_ok(
        &["solve", "--out", d4.path().to_str().unwrap(), "--workers", "4"],
        &envs,
    );
    for name in ["field.csv", "trace.csv", "metadata.json"] {
        let a = std::fs::read(d1.path().join(name)).unwrap();
        let b = std::fs::read(d4.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across worker counts");
    }
}
