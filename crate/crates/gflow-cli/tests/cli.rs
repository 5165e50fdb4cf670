//! Black-box checks of the command-line surface: exit codes, artifact
//! layout, and snapshot round trips through the binary.

use std::process::Command;

fn gflow() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gflow"))
}

#[test]
fn invalid_grid_size_exits_2() {
    let out = gflow()
        .args(["evolve", "--n", "100", "--t", "0.0", "--dt", "1e-3"])
        .arg("--out")
        .arg(tempfile::tempdir().unwrap().path().join("x"))
        .output()
        .unwrap();
    // 100 is even but fine; 101 is odd
    assert!(out.status.success(), "even N >= 8 is valid");

    let out = gflow()
        .args(["evolve", "--n", "101", "--t", "0.0", "--dt", "1e-3"])
        .arg("--out")
        .arg(tempfile::tempdir().unwrap().path().join("y"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "odd N must exit 2");
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("even"), "stderr: {msg}");
}

#[test]
fn unknown_flag_exits_2_with_usage() {
    let out = gflow().args(["evolve", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("usage") || msg.contains("Usage"), "stderr: {msg}");
}

#[test]
fn cfl_violation_exits_2() {
    let out = gflow()
        .args(["evolve", "--n", "64", "--dt", "0.05", "--t", "0.1"])
        .arg("--out")
        .arg(tempfile::tempdir().unwrap().path().join("z"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cfl"));
}

#[test]
fn evolve_writes_artifacts_and_diagnose_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = gflow()
        .args([
            "evolve",
            "--system",
            "sm",
            "--init",
            "bump:amp=0.4",
            "--n",
            "64",
            "--dt",
            "0.002",
            "--t",
            "0.01",
            "--diag-every",
            "1",
        ])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out_dir.join("diag.csv").exists());
    assert!(out_dir.join("config.echo.json").exists());
    assert!(out_dir.join("snap_00000000.gf").exists());
    assert!(out_dir.join("snap_00000005.gf").exists());

    // csv parses and the charge column is flat
    let rows = gflow_core::io::read_timeseries(out_dir.join("diag.csv")).unwrap();
    assert_eq!(rows.len(), 6);
    let c0 = rows[0].charge;
    for r in &rows {
        assert!((r.charge - c0).abs() < 1e-6);
    }

    let out = gflow()
        .arg("diagnose")
        .arg(out_dir.join("snap_00000005.gf"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("energy"));
}

#[test]
fn truncated_snapshot_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    gflow()
        .args(["evolve", "--n", "64", "--dt", "0.002", "--t", "0.0"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    let snap = out_dir.join("snap_00000000.gf");
    let bytes = std::fs::read(&snap).unwrap();
    std::fs::write(&snap, &bytes[..bytes.len() - 7]).unwrap();
    let out = gflow().arg("diagnose").arg(&snap).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "corrupt data is a numerical abort");
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated"));
}

#[test]
fn soliton_check_reports_small_residuals() {
    let out = gflow()
        .args(["soliton", "--family", "jackiw_pi", "--grid-n", "96", "--order", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("self_dual_plus"), "{text}");
    assert!(text.contains("worst residual"));
}

#[test]
fn varcheck_small_run_passes() {
    let out = gflow()
        .args(["varcheck", "--system", "sm", "--seeds", "2", "--grid-n", "24"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn reconstruct_runs_on_a_soliton_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    gflow()
        .args(["evolve", "--init", "soliton:n=1", "--n", "96", "--dt", "0.002", "--t", "0.0"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    let out = gflow()
        .arg("reconstruct")
        .arg(out_dir.join("snap_00000000.gf"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("group residual"));
}

#[test]
fn config_file_fills_defaults_but_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    std::fs::write(
        &cfg_path,
        r#"{"n": 64, "dt": 0.002, "t_final": 0.0, "init": "bump:amp=0.3"}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = gflow()
        .args(["evolve", "--t", "0.004"]) // flag overrides t_final
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("config.echo.json")).unwrap())
            .unwrap();
    assert_eq!(echo["n"], 64);
    assert_eq!(echo["t_final"], 0.004);
    assert_eq!(echo["init"], "bump:amp=0.3");
}
