//! The `photon-echo` binary end to end: files, exit codes and diagnostics.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use photon_echo::cli::{scenario, ScenarioId};
use photon_echo::sequence::serialize_config;

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photon-echo"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .unwrap()
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_fig2_config_writes_signal_and_two_echoes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "fig2.cfg",
        &serialize_config(&scenario(ScenarioId::Fig2)),
    );
    let o = bin(
        &["run", &cfg, "--cohmap", "re13", "--uv", "-12"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let signal = fs::read_to_string(dir.path().join("signal.csv")).unwrap();
    let mut lines = signal.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t_us,reP,imP,absP2,rho11,rho22,rho33,inversion_w"
    );
    assert_eq!(lines.count(), 2401);

    let echoes = fs::read_to_string(dir.path().join("echoes.csv")).unwrap();
    let rows: Vec<&str> = echoes.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    let e1: Vec<&str> = rows[0].split(',').collect();
    assert!((e1[0].parse::<f64>().unwrap() - 70.0).abs() < 0.1);
    assert_eq!((e1[2], e1[3], e1[4]), ("1", "true", "D"));

    let map = fs::read_to_string(dir.path().join("cohmap_re13.csv")).unwrap();
    let widths: Vec<usize> = map.lines().map(|l| l.split(',').count()).collect();
    assert_eq!(widths.len(), 162);
    assert!(widths.iter().all(|&w| w == 2402));
    assert!(map.starts_with("delta_khz,0.00000000e0,"));

    // nearest group to -12 kHz on the 5 kHz grid
    let uv = fs::read_to_string(dir.path().join("uv_-10.csv")).unwrap();
    assert!(uv.starts_with("t_us,u,v\n"));
}

#[test]
fn empty_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "empty.cfg", "# nothing here\n");
    let o = bin(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no pulses"));
    assert_eq!(stderr(&o).lines().count(), 2, "{}", stderr(&o));
}

#[test]
fn syntax_error_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "bad.cfg", "horizon_us = 100\nfwhm_khz 300\n");
    let o = bin(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn unstable_integration_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = "horizon_us = 5\nn_groups = 3\nGamma31 = 1000000\n\n[pulse]\nrole = D\nt_start_us = 1\nduration_us = 0.1\narea_pi = 1\n";
    let cfg = write_cfg(dir.path(), "stiff.cfg", text);
    let o = bin(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("numerical instability"));
}

#[test]
fn missing_file_and_unknown_scenario_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        bin(&["run", "/nonexistent/x.cfg"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bin(&["scenario", "fig4"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(bin(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn predict_reports_both_formulas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "fig2.cfg",
        &serialize_config(&scenario(ScenarioId::Fig2)),
    );
    let o = bin(&["predict", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.contains("T_E1 = 70 us") && text.contains("agree = true"),
        "{text}"
    );
    assert!(text.contains("not locking"));

    let mut shifted = scenario(ScenarioId::Fig2);
    shifted
        .sequence
        .role_mut(photon_echo::sequence::Role::D)
        .unwrap()
        .t_start_us = 4.5;
    let cfg = write_cfg(dir.path(), "td5.cfg", &serialize_config(&shifted));
    let text = stdout(&bin(&["predict", &cfg], dir.path()));
    assert!(text.contains("agree = false"), "{text}");

    let cfg = write_cfg(
        dir.path(),
        "fig1.cfg",
        &serialize_config(&scenario(ScenarioId::Fig1)),
    );
    let text = stdout(&bin(&["predict", &cfg], dir.path()));
    assert!(text.contains("locking satisfied, n = 1"), "{text}");

    let cfg = write_cfg(
        dir.path(),
        "nod.cfg",
        "[pulse]\nrole = R1\nt_start_us = 20\nduration_us = 0.1\narea_pi = 1\n",
    );
    assert_eq!(bin(&["predict", &cfg], dir.path()).status.code(), Some(2));
}

#[test]
fn sweep_writes_rows_in_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "fig1.cfg",
        &serialize_config(&scenario(ScenarioId::Fig1)),
    );
    let o = bin(&["sweep", &cfg, "B2.area_pi", "3", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(
        text.lines().next().unwrap(),
        "value,T_E1,T_E2,amp_E1,amp_E2,inverted_E1,inverted_E2"
    );
    assert_eq!(rows[0][0], "3.00000000e0");
    assert!(rows[0][3].starts_with('-'));
    assert!(!rows[1][3].starts_with('-'));
    assert_eq!(rows[0][2], "");

    assert_eq!(
        bin(&["sweep", &cfg, "B2.area_pi"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bin(&["sweep", &cfg, "B2.colour", "1"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn dumped_presets_run_like_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_photon-echo"))
        .args(["scenario", "fig1", "--dump-config"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let cfg = write_cfg(dir.path(), "fig1.cfg", &stdout(&o));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(bin(&["run", &cfg], &a).status.success());
    assert!(bin(&["scenario", "fig1"], &b).status.success());
    for name in ["signal.csv", "echoes.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap()
        );
    }
    let echoes = fs::read_to_string(a.join("echoes.csv")).unwrap();
    assert_eq!(echoes.lines().count(), 2);
    assert!(echoes.lines().nth(1).unwrap().contains(",-1,true,"));
}
