use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncdirac"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|s| s.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k]).collect()
}

#[test]
fn verify_algebra_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify-algebra"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = json(&dir.path().join("algebra_report.json"));
    assert_eq!(r["passed"], true);
    assert_eq!(r["regime"], "commutative");
    assert_eq!(r["dirac_relations"].as_array().unwrap().len(), 9);
}

#[test]
fn verify_algebra_flipped_bopp_sign_names_commutator() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify-algebra", "--theta", "0.1", "--eta", "0.05", "--debug_flip_bopp_sign", "true"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let r = json(&dir.path().join("algebra_report.json"));
    let failing: Vec<&str> = r["failing_commutators"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(failing.iter().any(|p| p.contains("x_nc")), "{failing:?}");
    assert!(stdout(&o).contains("failing commutator"));
}

#[test]
fn verify_algebra_si_units_skip_dual_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["verify-algebra", "--unit_mode", "SI", "--hbar", "1.0546e-34", "--theta", "1e-30", "--eta", "1.76e-61"],
        dir.path(),
    );
    let r = json(&dir.path().join("algebra_report.json"));
    assert!(r["dual_path"]["status"].as_str().unwrap().starts_with("skipped"));
    assert!(r["dual_path"]["max_deviation"].is_null());
    let ratio = r["consistency_ratio"].as_f64().unwrap();
    assert!(ratio > 2e-25 && ratio < 5e-24, "{ratio}");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn invariant_commutative_nullspace() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["invariant", "--config"])
        .arg(config("commutative.conf"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = json(&dir.path().join("nullspace_report.json"));
    assert_eq!(r["nullspace_basis"].as_array().unwrap().len(), 2);
    assert_eq!(r["free_constant_tension"], true);

    let (h, rows) = csv_rows(&dir.path().join("residuals.csv"));
    assert_eq!(h.len(), 19);
    assert_eq!(h[1], "rel_a");
    assert_eq!(h[15], "rel_o");
    assert_eq!(rows.len(), 16);
    assert!(column(&h, &rows, "invariance_residual").iter().all(|v| *v <= 1e-12));
}

#[test]
fn invariant_dynamic_has_empty_nullspace() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["invariant", "--gamma", "0.2", "--eta", "0.05", "--theta", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let r = json(&dir.path().join("nullspace_report.json"));
    assert!(r["nullspace_basis"].as_array().unwrap().is_empty());
    assert!(r["user_residual_max"].as_f64().unwrap() > 0.0);
    assert!(r["note"].as_str().unwrap().contains("tension"));
    assert!(stdout(&o).contains("invariance residual of configured constants"));
}

#[test]
fn invariant_constant_only_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["invariant", "--gamma", "0.2", "--eta", "0.05", "--a1", "0", "--b3", "0", "--c1", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = json(&dir.path().join("nullspace_report.json"));
    assert_eq!(r["user_residual_max"].as_f64().unwrap(), 0.0);
}

#[test]
fn xi_commutative_long_window() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["xi", "--t1", "5", "--dt", "1e-3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let (h, rows) = csv_rows(&dir.path().join("xi_trajectory.csv"));
    for c in ["dev_xi1", "dev_xi2", "dev_F1", "dev_F2"] {
        assert!(column(&h, &rows, c).iter().all(|d| *d <= 1e-6), "{c}");
    }
    let t = column(&h, &rows, "t");
    assert!((t[t.len() - 1] - 5.0).abs() < 1e-12);
    let re = column(&h, &rows, "re_xi1");
    assert!((re[0] + 0.25).abs() < 1e-12);
}

#[test]
fn xi_dynamic_exports_branch() {
    let dir = tempfile::tempdir().unwrap();
    let (gamma, m) = (0.2, 1.0);
    let o = run(&["xi", "--gamma", "0.2", "--eta", "0.05", "--theta", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let (h, rows) = csv_rows(&dir.path().join("xi_trajectory.csv"));
    let t = column(&h, &rows, "t");
    let re = column(&h, &rows, "re_nc_branch");
    let im = column(&h, &rows, "im_nc_branch");
    for k in [0, rows.len() / 2, rows.len() - 1] {
        let amp = (-gamma * t[k]).exp();
        let ph = 2.0 * m * t[k];
        assert!((re[k] - amp * ph.cos()).abs() < 1e-12);
        assert!((im[k] - amp * ph.sin()).abs() < 1e-12);
    }
}

#[test]
fn xi_zero_mass_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["xi", "--m", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1/m"), "{}", stderr(&o));
}

#[test]
fn evolve_commutative_constrained_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["evolve", "--config"])
        .arg(config("commutative.conf"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let (h, rows) = csv_rows(&dir.path().join("evolution.csv"));
    assert_eq!(&h[..7], ["t", "re_I", "drift", "dx_dpx", "bound", "margin", "E_tracked"]);
    for c in ["margin", "margin_y", "margin_nc"] {
        assert!(column(&h, &rows, c).iter().all(|v| *v >= -1e-9), "{c}");
    }
    let re_i = column(&h, &rows, "re_I");
    let drift = column(&h, &rows, "drift").into_iter().fold(0.0, f64::max);
    assert!(drift / (re_i[0].abs() + 1.0) <= 1e-6);
}

#[test]
fn evolve_small_truncation_warns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["evolve", "--fock_N", "4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("truncation"), "{}", stdout(&o));
}

#[test]
fn report_after_all_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("commutative.conf");
    for cmd in ["verify-algebra", "invariant", "xi", "evolve", "report"] {
        let o = bin().arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stdout(&o));
    }
    let first = json(&dir.path().join("run_summary.json"));
    let sections = first["sections"].as_object().unwrap();
    assert_eq!(sections.len(), 4);
    assert!(sections.values().all(|s| s["passed"] == true));
    assert_eq!(first["config_hash"].as_str().unwrap().len(), 64);

    let o = bin().arg("report").arg("--config").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let mut second = json(&dir.path().join("run_summary.json"));
    let mut first = first;
    first["timestamp_unix"] = Value::Null;
    second["timestamp_unix"] = Value::Null;
    assert_eq!(first, second);
}

#[test]
fn report_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    run(&["verify-algebra"], dir.path());
    run(&["invariant"], dir.path());
    run(&["xi"], dir.path());
    let o = run(&["report"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("evolution.csv"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["invariant", "--unknown_key", "1"],
        vec!["invariant", "--dt", "0"],
        vec!["invariant", "--t1", "-1"],
        vec!["evolve", "--fock_N", "1"],
        vec!["xi", "--theta", "abc"],
    ] {
        let o = run(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = bin().args(["invariant", "--config", "/nonexistent.conf"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn overrides_accept_equals_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify-algebra", "--theta=0.1", "--eta=0.05"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = json(&dir.path().join("algebra_report.json"));
    assert_eq!(r["regime"], "static_noncommutative");
}

#[test]
fn emit_selects_formats() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["invariant", "--emit", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("residuals.csv").exists());
    assert!(!dir.path().join("nullspace_report.json").exists());
}

#[test]
fn csv_numbers_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    run(&["xi", "--t1", "0.01"], dir.path());
    let text = fs::read_to_string(dir.path().join("xi_trajectory.csv")).unwrap();
    let line = text.lines().nth(2).unwrap();
    for field in line.split(',') {
        let v: f64 = field.parse().unwrap();
        assert_eq!(format!("{v:.16e}").parse::<f64>().unwrap(), v);
        assert!(field.contains('e'));
    }
}
