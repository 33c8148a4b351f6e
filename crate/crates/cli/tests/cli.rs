use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uncollapse"))
}

fn run(dir: &TempDir, sub: &str, config: Option<&str>, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(format!("{sub}.csv"));
    let mut cmd = bin();
    cmd.arg(sub).arg("--out").arg(&out).args(extra);
    if let Some(json) = config {
        let path = dir.path().join(format!("{sub}.json"));
        std::fs::write(&path, json).unwrap();
        cmd.arg("--config").arg(path);
    }
    let status = cmd.output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    out
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k]).collect()
}

const GRID: &str = r#""p_grid": [0.0, 0.2, 0.4, 0.6, 0.8, 0.95]"#;

#[test]
fn collapse_background_is_half_p_for_equatorial_input() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"sweep": {{{GRID}}}}}"#);
    let (h, rows) = read_csv(&run(&dir, "collapse", Some(&cfg), &["--no-decoherence"]));
    assert_eq!(h, ["p", "P_X", "P_Y", "P_Z", "P_B", "X", "Y", "Z", "theta"]);
    assert_eq!(rows.len(), 6);
    for (p, pb) in column(&h, &rows, "p").iter().zip(column(&h, &rows, "P_B")) {
        assert!((pb - p / 2.0).abs() < 1e-11);
    }
    for (p, theta) in column(&h, &rows, "p").iter().zip(column(&h, &rows, "theta")) {
        let theory = 2.0 * ((1.0 - p).sqrt()).atan();
        assert!((theta - theory).abs() < 1e-10, "p={p}: {theta} vs {theory}");
    }
}

#[test]
fn ideal_uncollapse_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"sweep": {{{GRID}}}}}"#);
    let (h, rows) = read_csv(&run(&dir, "uncollapse", Some(&cfg), &["--no-decoherence"]));
    assert_eq!(h.last().unwrap(), "p_success");
    for r in &rows {
        let get = |n: &str| r[h.iter().position(|x| x == n).unwrap()];
        assert!((get("X") - 1.0).abs() < 1e-10);
        assert!(get("Y").abs() < 1e-10 && get("Z").abs() < 1e-10);
        assert!((get("P_B") - get("p")).abs() < 1e-11);
        assert!((get("p_success") - (1.0 - get("p"))).abs() < 1e-11);
        assert!((get("theta") - PI / 2.0).abs() < 1e-10);
    }
}

#[test]
fn detuned_refocusing_pulse_breaks_constancy() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"sweep": {{{GRID}}}}}"#);
    let (h, rows) = read_csv(&run(&dir, "uncollapse", Some(&cfg), &["--no-decoherence", "--pi-fraction", "0.9"]));
    let spread = |v: Vec<f64>| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread(column(&h, &rows, "Y")) > 0.05 || spread(column(&h, &rows, "Z")) > 0.05);
}

#[test]
fn qpt_fidelity_and_chi_file() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"sweep": {{{GRID}, "chi_p": [0.47]}}}}"#);
    let out = run(&dir, "qpt", Some(&cfg), &[]);
    let (h, rows) = read_csv(&out);
    assert_eq!(h, ["p", "fidelity", "chi_trace", "min_eigenvalue"]);
    for (p, f) in column(&h, &rows, "p").iter().zip(column(&h, &rows, "fidelity")) {
        if *p <= 0.6 {
            assert!(f > 0.7, "p={p}: {f}");
        }
    }
    for t in column(&h, &rows, "chi_trace") {
        assert!((t - 1.0).abs() < 1e-10);
    }
    let chi: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("qpt.chi_p0.47.json")).unwrap()).unwrap();
    assert_eq!(chi["basis"], serde_json::json!(["I", "X", "Y", "Z"]));
    let xx = chi["real"][1][1].as_f64().unwrap();
    assert!((xx - chi["fidelity"].as_f64().unwrap()).abs() < 1e-12);

    let ideal = run(&dir, "qpt", Some(&cfg), &["--no-decoherence"]);
    let (h, rows) = read_csv(&ideal);
    for f in column(&h, &rows, "fidelity") {
        assert!((f - 1.0).abs() < 1e-10);
    }
}

#[test]
fn monte_carlo_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let args = ["--mode", "mc", "--shots", "2000", "--seed", "11"];
    let a = std::fs::read(run(&dir, "uncollapse", None, &args)).unwrap();
    let b = std::fs::read(run(&dir, "uncollapse", None, &args)).unwrap();
    assert_eq!(a, b);
    let other = ["--mode", "mc", "--shots", "2000", "--seed", "12"];
    assert_ne!(a, std::fs::read(run(&dir, "uncollapse", None, &other)).unwrap());
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    for json in [
        r#"{"unknown": 1}"#,
        r#"{"sweep": {"p_grid": [0.5, 0.2]}}"#,
        r#"{"sweep": {"p_grid": [1.0]}}"#,
        r#"{"experiment": {"device": {"t1_ns": 100, "t2_echo_ns": 350}}}"#,
        "not json",
    ] {
        let path = dir.path().join("bad.json");
        std::fs::write(&path, json).unwrap();
        let out = bin()
            .args(["collapse", "--out"])
            .arg(dir.path().join("x.csv"))
            .arg("--config")
            .arg(&path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{json}");
    }
    let out = bin().args(["collapse", "--out", "x.csv", "--shots", "0"]).current_dir(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_code_one() {
    let dir = TempDir::new().unwrap();
    let out = bin().args(["collapse", "--out"]).arg(dir.path().join("missing/dir/x.csv")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
