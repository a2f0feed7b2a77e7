//! End-to-end tests of the `fpja` binary: argument surface, exit codes,
//! output determinism, and overrides.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fpja"))
}

fn reference_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_device.toml")
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

#[test]
fn sweep_succeeds_and_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    let r1 = run("sweep", &reference_config(), &out1, &[]);
    assert!(
        r1.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&r1.stderr)
    );
    let r2 = run("sweep", &reference_config(), &out2, &[]);
    assert!(r2.status.success());
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    // manifest sits next to the data file
    assert!(dir.path().join("a.csv.manifest.toml").exists());
    let data = std::fs::read_to_string(&out1).unwrap();
    let header: Vec<&str> = data.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(header.iter().any(|l| l.contains("columns: delta_mhz")));
    // 801 grid points -> 801 data rows after the column-name line
    assert_eq!(data.lines().filter(|l| !l.starts_with('#')).count(), 802);
}

#[test]
fn all_commands_exit_zero_on_the_reference_config() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [
        "sweep",
        "quadrature",
        "noise",
        "stability",
        "tune",
        "bounds",
    ] {
        let out = dir.path().join(format!("{cmd}.csv"));
        let r = run(cmd, &reference_config(), &out, &[]);
        assert!(
            r.status.success(),
            "{cmd} failed: {}",
            String::from_utf8_lossy(&r.stderr)
        );
        assert!(out.exists());
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");

    // missing file
    let r = run("sweep", &dir.path().join("nope.toml"), &out, &[]);
    assert_eq!(r.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("category=ParseError"), "{stderr}");

    // invalid field via override
    let r = run(
        "sweep",
        &reference_config(),
        &out,
        &["--override", "modes.a.kappa_mhz=-1"],
    );
    assert_eq!(r.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("category=ValidationError"), "{stderr}");
    assert!(stderr.contains("modes.a.kappa"), "{stderr}");
}

#[test]
fn unreachable_tune_target_exits_3_with_category() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tune.csv");
    let r = run(
        "tune",
        &reference_config(),
        &out,
        &["--override", "tune.target_s=0.95"],
    );
    assert_eq!(r.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(
        stderr.contains("category=StabilityBoundViolated"),
        "{stderr}"
    );
}

#[test]
fn tune_target_below_the_gain_floor_reports_target_unreachable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tune.csv");
    let r = run(
        "tune",
        &reference_config(),
        &out,
        &["--override", "tune.target_gx_db=-30"],
    );
    assert_eq!(r.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("category=TargetUnreachable"), "{stderr}");
}

#[test]
fn override_changes_the_operating_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let r = run(
        "quadrature",
        &reference_config(),
        &out,
        &["--override", "pumps.beta_bb.mag=0.0"],
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let manifest = std::fs::read_to_string(dir.path().join("q.csv.manifest.toml")).unwrap();
    // with the amplification pump off, G_X = G_Y = G_S
    let gx_line = manifest.lines().find(|l| l.starts_with("gx_db")).unwrap();
    let gy_line = manifest.lines().find(|l| l.starts_with("gy_db")).unwrap();
    let parse = |l: &str| l.split('=').nth(1).unwrap().trim().parse::<f64>().unwrap();
    assert!((parse(gx_line) - parse(gy_line)).abs() < 1e-9);
}

#[test]
fn near_pole_override_reports_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    // beta_bb exactly at the r = 1 pole makes the resonant inversion singular
    let r = run(
        "quadrature",
        &reference_config(),
        &out,
        &["--override", "pumps.beta_bb.mag=2.5"],
    );
    assert_eq!(
        r.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("category=PoleReached"), "{stderr}");
}
