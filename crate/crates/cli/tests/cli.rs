use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tracegn::dcres::read_grid;

fn tracegn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracegn")).args(args).output().expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

fn col(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn sample_size_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracegn(&["sample-size", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("sample_size.csv"));
    assert_eq!(rows.len(), 31);
    let (lo, up) = (col(&rows, "sufficient_lower"), col(&rows, "sufficient_upper"));
    let (n4l, n4u) = (col(&rows, "necessary_lower_r4"), col(&rows, "necessary_upper_r4"));
    let (rl, m) = (col(&rows, "ratio_lower"), col(&rows, "manifest"));
    let mut prev_ratio = 0.0;
    for r in &rows[1..] {
        let n = |i: usize| r[i].parse::<u64>().unwrap();
        assert!(n(n4l) <= n(lo) && n(n4u) <= n(up));
        let ratio: f64 = r[rl].parse().unwrap();
        assert!(ratio > prev_ratio);
        prev_ratio = ratio;
        assert_eq!(r[m], "manifest.txt");
    }
    assert!(dir.path().join("manifest.txt").exists());
}

#[test]
fn single_delta_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracegn(&["sample-size", "--delta-min", "0.2", "--delta-max", "0.2", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    assert_eq!(csv_rows(&dir.path().join("sample_size.csv")).len(), 2);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(
        tracegn(&["sample-size", "--delta-min", "0.4", "--delta-max", "0.2", "--out", &out]).status.code(),
        Some(2)
    );
    assert_eq!(tracegn(&["sample-size", "--eps", "1.5", "--out", &out]).status.code(), Some(2));
    assert_eq!(tracegn(&["sample-size", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(tracegn(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("o");
    fs::write(
        &cfg,
        format!("# table\neps = 0.2\ndelta_min = 0.1\ndelta-max = 0.3\ndelta-step = 0.1\nout = {}\n", out.display()),
    )
    .unwrap();
    let o = tracegn(&["sample-size", "--config", cfg.to_str().unwrap(), "--delta-step", "0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("sample_size.csv"));
    assert_eq!(rows.len(), 6);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("eps = 0.2\n"));
    assert!(manifest.contains("delta-step = 0.05\n"));
    assert!(manifest.contains(&format!("config = {}\n", cfg.display())));
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    let out = out_arg(&dir.path().join("o"));
    fs::write(&cfg, "eps = 0.2\nunknown = 1\n").unwrap();
    assert_eq!(tracegn(&["sample-size", "--config", cfg.to_str().unwrap(), "--out", &out]).status.code(), Some(3));
    fs::write(&cfg, "eps = lots\n").unwrap();
    assert_eq!(tracegn(&["sample-size", "--config", cfg.to_str().unwrap(), "--out", &out]).status.code(), Some(3));
    assert_eq!(tracegn(&["sample-size", "--config", "/nonexistent/x.cfg", "--out", &out]).status.code(), Some(3));
    assert_eq!(tracegn(&["invert", "--kappa", "1.5", "--grid", "8", "--p", "2", "--out", &out]).status.code(), Some(3));
    assert_eq!(tracegn(&["invert", "--example", "E9", "--out", &out]).status.code(), Some(3));
    assert_eq!(tracegn(&["invert", "--grid", "16", "--p", "20", "--out", &out]).status.code(), Some(3));
}

#[test]
fn trace_coverage_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracegn(&["trace-coverage", "--fixture", "random20", "--trials", "2000", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("coverage.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][col(&rows, "pass")], "true");
    assert_eq!(rows[1][col(&rows, "n")], "320");
}

#[test]
fn too_few_probes_fail_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracegn(&["trace-coverage", "--n", "5", "--trials", "2000", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(4));
    let rows = csv_rows(&dir.path().join("coverage.csv"));
    assert_eq!(rows[1][col(&rows, "pass")], "false");
}

#[test]
fn extremal_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = tracegn(&[
        "extremal-verify",
        "--alpha",
        "1",
        "--beta",
        "1",
        "--n",
        "3",
        "--grid-step",
        "0.25",
        "--samples",
        "10000",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("extremal.csv"));
    // three points, 15 weights each
    assert_eq!(rows.len(), 1 + 3 * 15);
    assert!(rows[0].contains(&"lambda_3".to_string()));
    assert!(rows[1..].iter().all(|r| r[col(&rows, "violation")] == "false"));
    let o = tracegn(&["extremal-verify", "--grid-step", "0.3", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

fn small_inversion(dir: &Path, variant: &str) -> Output {
    tracegn(&["invert", "--grid", "12", "--p", "4", "--variant", variant, "--seed", "5", "--out", &out_arg(dir)])
}

#[test]
fn inversion_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_inversion(dir.path(), "iv");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = String::from_utf8(o.stdout).unwrap();
    for key in ["variant=iv", "pde_solves=", "final_sampled_misfit=", "full_misfit=", "termination="] {
        assert!(line.contains(key), "{line}");
    }
    assert_eq!(fs::read_to_string(dir.path().join("summary.txt")).unwrap(), line);
    let (g, mu) = read_grid(&fs::read_to_string(dir.path().join("conductivity.grid")).unwrap()).unwrap();
    assert_eq!((g.nx(), g.ny()), (12, 12));
    assert!(mu.iter().all(|v| *v > 0.0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["manifest"], "manifest.txt");
    let iters = report["report"]["iterations"].as_array().unwrap();
    let rows = csv_rows(&dir.path().join("iterations.csv"));
    assert_eq!(rows.len(), iters.len() + 1);
    let total: u64 = rows[1..].iter().map(|r| r[col(&rows, "solves")].parse::<u64>().unwrap()).sum();
    assert_eq!(total, report["summary"]["pde_solves"].as_u64().unwrap());
}

#[test]
fn vanilla_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_inversion(dir.path(), "vanilla");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("iterations.csv"));
    assert!(rows[1..].iter().all(|r| r[col(&rows, "n_k")] == "16" && r[col(&rows, "cv_n")].is_empty()));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(small_inversion(a.path(), "ii").status.success());
    assert!(small_inversion(b.path(), "ii").status.success());
    for f in ["report.json", "iterations.csv", "conductivity.grid", "true_conductivity.grid", "summary.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
