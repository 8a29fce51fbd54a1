//! End-to-end runs of the `dephasing` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dephasing(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dephasing"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("stderr has a line")).expect("stderr is JSON")
}

/// Parsed CSV: header plus numeric rows.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn row_with(rows: &[Vec<f64>], first: f64) -> &[f64] {
    rows.iter().find(|r| r[0] == first).expect("row present")
}

const DECOHERENCE: &str = "command=decoherence\nstate=GHZ\nL=4\na=1\nJ=ohmic\nalpha=1\ndim=1\nomega_c=20\nt=20\n";

#[test]
fn happy_path_writes_csv_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.cfg", DECOHERENCE);
    let out = dephasing(&["--config", &cfg, "--out", "run.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("run.csv"));
    assert_eq!(header, ["t", "gamma_vac", "gamma_ex", "gamma_total"]);
    assert_eq!(rows.len(), 1);
    // Matches the L=4 point of the size sweep at t=20.
    assert!((rows[0][3] / 54.8854980932753 - 1.0).abs() < 1e-9);
    let side: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(side["version"], dephasing::VERSION);
    assert_eq!(side["config"]["omega_c"], "20");
    assert_eq!(side["tolerances"]["quadrature_relative"], 1e-9);
}

#[test]
fn validation_errors_exit_one_and_name_keys() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.cfg", &DECOHERENCE.replace("L=4", "L=-2"));
    let out = dephasing(&["--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "validation-error");
    assert_eq!(err["issues"][0]["key"], "L");
    assert_eq!(err["issues"][0]["line"], 3);

    let cfg = write(dir.path(), "nocmd.cfg", "state=GHZ\nL=4\n");
    let err = stderr_json(&dephasing(&["--config", &cfg], dir.path()));
    let keys: Vec<&str> = err["issues"].as_array().unwrap().iter().filter_map(|i| i["key"].as_str()).collect();
    assert!(keys.contains(&"command"));

    let cfg = write(dir.path(), "garbled.cfg", "command=figure\nno equals sign\n");
    let out = dephasing(&["--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "parse-error");
}

#[test]
fn unknown_preset_and_bad_flags_exit_one() {
    let dir = TempDir::new().unwrap();
    let out = dephasing(&["--preset", "fig9"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "unknown-preset");
    let out = dephasing(&["--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn quadrature_failure_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "q.cfg",
        "command=decoherence\nstate=GHZ'\nL=3\nJ=ohmic\ndim=0.5\nomega_c=20\noccupation=thermal\nT=1\nt=50\n\
         max_evaluations=100\n",
    );
    let out = dephasing(&["--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "quadrature-failure");
}

#[test]
fn sweep_rows_sorted_by_size() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "s.cfg",
        "command=sweep\nstate=GHZ'\nL=4,2\nJ=ohmic\ndim=1\nomega_c=20\nt=20\n",
    );
    let out = dephasing(&["--config", &cfg], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let sizes: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(sizes, ["2", "4"]);
    assert!(text.starts_with("L,gamma_vac,gamma_ex,gamma_total\n"));
}

#[test]
fn fig4_left_preset_reference_row() {
    let dir = TempDir::new().unwrap();
    let out = dephasing(&["--preset", "fig4-left", "--out", "fig4.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("fig4_d1.csv"));
    assert_eq!(header, ["L", "gamma_vac", "gamma_ex", "gamma_total"]);
    assert_eq!(rows.len(), 30);
    let g = row_with(&rows, 30.0)[3];
    assert!((g / 769.7536465841149 - 1.0).abs() < 1e-9, "{g}");
    assert!(dir.path().join("fig4_d2.csv").exists());
}

#[test]
fn fig5_preset_reference_row() {
    let dir = TempDir::new().unwrap();
    let out = dephasing(&["--preset", "fig5", "--out", "fig5.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("fig5_sigma_2pi_over_50.csv"));
    let g = row_with(&rows, 100.0)[3];
    assert!((g / 59679.0 - 1.0).abs() < 1e-3, "{g}");
    let (_, rows) = read_csv(&dir.path().join("fig5_delta.csv"));
    assert!((row_with(&rows, 1.0)[3] / 41.2855 - 1.0).abs() < 1e-3);
}

#[test]
fn fig3_preset_peak_is_l_squared() {
    let dir = TempDir::new().unwrap();
    let out = dephasing(&["--preset", "fig3", "--out", "fig3.csv"], dir.path());
    assert!(out.status.success());
    let (header, rows) = read_csv(&dir.path().join("fig3_L8.csv"));
    assert_eq!(header, ["k", "gamma"]);
    let peak = row_with(&rows, std::f64::consts::PI)[1];
    assert!((peak - 64.0).abs() < 1e-9, "{peak}");
}

#[test]
fn fig6_preset_writes_both_states() {
    let dir = TempDir::new().unwrap();
    let out = dephasing(&["--preset", "fig6", "--out", "fig6.csv"], dir.path());
    assert!(out.status.success());
    for name in ["fig6_ghz.csv", "fig6_ghz_prime.csv"] {
        let (header, rows) = read_csv(&dir.path().join(name));
        assert_eq!(header[0], "t");
        assert_eq!(rows.len(), 1201);
        assert_eq!(rows[0][3], 0.0);
    }
}

#[test]
fn show_config_prints_preset_parameters() {
    let dir = TempDir::new().unwrap();
    let out = dephasing(&["--preset", "fig6", "--show-config"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("preset=fig6"));
    assert!(text.contains("omega_c=10"));
    assert!(text.contains("t=range(0,12,0.01)"));
    assert!(!dir.path().join("fig6.json").exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "h.cfg", "command=histogram\nL=40\nk=0\nsamples=5000\ntail_threshold=800\n");
    for (name, threads) in [("a.csv", "1"), ("b.csv", "4")] {
        let out = dephasing(&["--config", &cfg, "--seed", "9", "--threads", threads, "--out", name], dir.path());
        assert!(out.status.success());
    }
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    let strip_outputs = |n: &str| {
        let mut v: Value = serde_json::from_slice(&read(n)).unwrap();
        v["outputs"] = Value::Null;
        v
    };
    assert_eq!(strip_outputs("a.json"), strip_outputs("b.json"));
    let side = strip_outputs("a.json");
    assert_eq!(side["config"]["seed"], "9");
}

#[test]
fn rerun_from_sidecar_reproduces_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "t.cfg",
        "command=decoherence\nstate=GHZ'\nL=5\nJ=ohmic\ndim=1\nomega_c=20\noccupation=thermal\nT=0.5\n\
         t=linspace(0,3,7)\n",
    );
    let out = dephasing(&["--config", &cfg, "--tolerance", "1e-8", "--out", "first.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = dephasing(&["--config", "first.json", "--out", "second.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read(dir.path().join("first.csv")).unwrap();
    assert_eq!(first, fs::read(dir.path().join("second.csv")).unwrap());
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 8);

    let out = dephasing(&["--preset", "fig3", "--out", "p.csv"], dir.path());
    assert!(out.status.success());
    let out = dephasing(&["--config", "p.json", "--out", "q.csv"], dir.path());
    assert!(out.status.success());
    assert_eq!(
        fs::read(dir.path().join("p_L6.csv")).unwrap(),
        fs::read(dir.path().join("q_L6.csv")).unwrap()
    );
}

#[test]
fn fidelity_and_susceptibility_commands() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "f.cfg",
        "command=fidelity\nstate=GHZ\nL=4\nmodes=pi:pi:0.3:0;0.5:0.5:0.2:1\nt=0,1\nstrength=0.5\n",
    );
    let out = dephasing(&["--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,theta,lambda,gamma,fidelity"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[4], 1.0);

    let cfg = write(dir.path(), "s.cfg", "command=susceptibility\nstate=1,0,-1\nk=0,pi\nmethod=direct\n");
    let out = dephasing(&["--config", &cfg], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // d = (1, 0, -1): |1 - e^{2ik}|^2 is 0 at k=0 and at k=pi.
    for line in text.lines().skip(1) {
        let g: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(g.abs() < 1e-12);
    }
}
