use std::path::Path;
use std::process::{Command, Output};

fn wgf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgf")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const FLAT_NULL: &str = r#"
name = "flat"
[geometry]
kind = "flat-disk"
mesh_size = 0.3
[media]
pec_lower = true
[excitation]
polarization = "tm"
grazing_angle = 0.6
[window]
A = 2.0
[error]
target = "source"
points = "disk"
radius = 0.8
height = 0.5
count = 30
"#;

const BUMP_GRID: &str = r#"
name = "bump"
[geometry]
kind = "hemispherical-bump"
radius = 0.5
mesh_size = 0.3
[media]
pec_lower = true
[excitation]
grazing_angle = 0.09817477042468103
[window]
A = 1.5
[error]
target = "bump"
radius = 1.0
count = 40
[study]
mode = "hA-grid"
h = [0.35, 0.3]
A = [1.5, 2.0]
"#;

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let head: Vec<_> = lines.next().unwrap().split(',').collect();
    let i = head.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn flat_disk_null_scenario_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "flat.toml", FLAT_NULL);
    let out_dir = dir.path().join("out");
    let out = wgf(&["solve", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let errors = std::fs::read_to_string(out_dir.join("errors.csv")).unwrap();
    let e: f64 = column(&errors, "error_E")[0].parse().unwrap();
    assert!(e < 1e-6, "{e}");
    let manifest = std::fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    for key in ["version", "window.c", "geometry.mesh_size", "media.omega", "quadrature.singular_order", "solve.tolerance"] {
        assert!(manifest.lines().any(|l| l.starts_with(&format!("{key} ="))), "{key}");
    }
}

#[test]
fn invalid_window_c_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &FLAT_NULL.replace("A = 2.0", "A = 2.0\nc = 1.3"));
    let out = wgf(&["solve", &cfg, "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window.c"));
}

#[test]
fn inconsistent_formulation_and_far_field_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.toml", &format!("{FLAT_NULL}\n[solve]\nformulation = \"mueller\"\n"));
    let out = wgf(&["solve", &a]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solve.formulation"));
    let b = write(dir.path(), "b.toml", &format!("{FLAT_NULL}\n[outputs]\nfar_field = true\n"));
    let out = wgf(&["solve", &b]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("far fields are not available"));
}

#[test]
fn missing_file_and_bad_usage_exit_one() {
    assert_eq!(wgf(&["solve", "/nonexistent/x.toml"]).status.code(), Some(1));
    assert_eq!(wgf(&["bogus"]).status.code(), Some(1));
    assert_eq!(wgf(&["--help"]).status.code(), Some(0));
}

#[test]
fn solver_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = FLAT_NULL
        .replace("kind = \"flat-disk\"", "kind = \"hemispherical-bump\"\nradius = 0.5")
        .replace("[window]", "[solve]\nmax_iterations = 1\ntolerance = 1e-12\n[window]");
    let cfg = write(dir.path(), "c.toml", &text);
    let out = wgf(&["solve", &cfg, "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_passes() {
    let out = wgf(&["validate"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");
}

#[test]
fn ha_grid_study_has_one_row_per_pair_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bump.toml", BUMP_GRID);
    let out_dir = dir.path().join("out");
    let out = wgf(&["study", &cfg, "--output-dir", out_dir.to_str().unwrap(), "--threads", "1", "--residuals"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let study = std::fs::read_to_string(out_dir.join("study.csv")).unwrap();
    assert_eq!(study.lines().count(), 5);
    let pairs: Vec<_> = column(&study, "h").into_iter().zip(column(&study, "A")).collect();
    assert_eq!(pairs, [("0.35", "1.5"), ("0.35", "2"), ("0.3", "1.5"), ("0.3", "2")].map(|(a, b)| (a.to_string(), b.to_string())));
    let sa = column(&study, "slope_A");
    let sh = column(&study, "slope_h");
    assert!(sa[0].is_empty() && !sa[1].is_empty() && sa[2].is_empty() && !sa[3].is_empty());
    assert!(sh[0].is_empty() && sh[1].is_empty() && !sh[2].is_empty() && !sh[3].is_empty());
    assert!(out_dir.join("bump_residuals_3.csv").exists());

    // identical config and thread count give a bit-identical error table
    let again = dir.path().join("again");
    let out = wgf(&["study", &cfg, "--output-dir", again.to_str().unwrap(), "--threads", "1"]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read_to_string(out_dir.join("errors.csv")).unwrap(),
        std::fs::read_to_string(again.join("errors.csv")).unwrap()
    );
}

#[test]
fn spectrum_reports_both_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", &BUMP_GRID.replace("mesh_size = 0.3", "mesh_size = 0.4"));
    let out = wgf(&["spectrum", &cfg, "--output-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("plain:") && text.contains("jacobi:"));
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let n = csv.lines().filter(|l| l.starts_with("jacobi")).count();
    assert_eq!(n, csv.lines().filter(|l| l.starts_with("plain")).count());
    assert!(n > 10);
}
