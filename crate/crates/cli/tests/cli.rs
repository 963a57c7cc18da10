use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const LAMBDA: &str = r#"{"type":"lambda_atom","gamma1":1,"gamma2":1,"delta1":2,"delta2":-2,"omega":0}"#;
const IN_MODES: &str = r#"{"kbar1":2,"kbar2":2,"alpha1":1,"alpha2":1,"L":0,"nu":0,"shape":"gaussian",
  "grid":{"kind":"modes","k_center":0,"dk":0.20943951023931953,"modes":128}}"#;

fn wqed(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wqed"));
    c.current_dir(dir).args(args);
    if let Some(t) = threads {
        c.env("WQED_THREADS", t);
    }
    c.output().unwrap()
}

fn setup() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("l.json"), LAMBDA).unwrap();
    std::fs::write(d.path().join("in.json"), IN_MODES).unwrap();
    d
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn spectrum_lists_all_sectors_with_units() {
    let d = setup();
    let o = wqed(d.path(), &["--units", "gamma", "spectrum", "--model", "l.json"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "N,lambda,re [Gamma],im [Gamma]");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.iter().filter(|r| r[0] == 0.0).count(), 2);
    let e1: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == 1.0).collect();
    assert!((e1[0][3] + 1.0).abs() < 1e-12);
}

#[test]
fn single_amplitudes_conserve_flux() {
    let d = setup();
    let o = wqed(d.path(), &["single", "--model", "l.json", "--nu", "0", "--kmin", "-5", "--kmax", "5", "--steps", "11", "--out", "t.csv"], None);
    assert!(o.status.success());
    let text = std::fs::read_to_string(d.path().join("t.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
    for l in text.lines().skip(1) {
        let defect: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(defect < 1e-12);
    }
}

#[test]
fn kernel_reports_terms_with_provenance() {
    let d = setup();
    let o = wqed(d.path(), &["kernel", "--model", "l.json", "--mu", "1", "--nu", "0", "--part", "t", "--at", "1.5,2.5,2,2"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["command"], "kernel");
    assert_eq!(v["config"]["model"]["type"], "lambda_atom");
    assert!(!v["terms"].as_array().unwrap().is_empty());
}

#[test]
fn bad_inputs_exit_with_validation_errors() {
    let d = setup();
    let o = wqed(d.path(), &["single", "--model", "l.json", "--nu", "7", "--kmin", "0", "--kmax", "1", "--steps", "3"], None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "validation");

    let o = wqed(d.path(), &["spectrum", "--model", "missing.json"], None);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(d.path().join("bad.json"), r#"{"type":"lambda_atom","gamma1":-1,"gamma2":1,"delta1":0,"delta2":0,"omega":0}"#)
        .unwrap();
    let o = wqed(d.path(), &["spectrum", "--model", "bad.json"], None);
    assert_eq!(o.status.code(), Some(2));

    let o = wqed(d.path(), &["oracle", "--model", "l.json", "--in", "in.json", "--modes", "64", "--dk", "1", "--tend", "19", "--tbefore", "5", "--dt", "1"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("recurrence"));

    let o = wqed(d.path(), &["kernel", "--model", "l.json", "--mu", "0", "--nu", "0", "--part", "t", "--at", "1,2,3,4"], Some("x"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_runs_leave_no_artifact() {
    let d = setup();
    let o = wqed(d.path(), &["single", "--model", "l.json", "--nu", "9", "--kmin", "0", "--kmax", "1", "--steps", "3", "--out", "t.csv"], None);
    assert!(!o.status.success());
    assert!(!d.path().join("t.csv").exists());
}

#[test]
fn config_file_resolves_paths_and_rejects_unknown_keys() {
    let d = setup();
    let sub = d.path().join("cfg");
    std::fs::create_dir(&sub).unwrap();
    std::fs::write(sub.join("m.json"), LAMBDA).unwrap();
    std::fs::write(sub.join("run.json"), r#"{"units":"gamma","command":"spectrum","args":{"model":"m.json","out":"s.csv"}}"#).unwrap();
    let o = wqed(d.path(), &["run", "--config", "cfg/run.json"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(sub.join("s.csv")).unwrap().starts_with("N,lambda,re [Gamma]"));

    std::fs::write(sub.join("bad.json"), r#"{"command":"spectrum","args":{"model":"m.json","extra":1}}"#).unwrap();
    let o = wqed(d.path(), &["run", "--config", "cfg/bad.json"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scatter_oracle_compare_round_trip_and_thread_independence() {
    let d = setup();
    let a1 = wqed(d.path(), &["scatter", "--model", "l.json", "--in", "in.json"], Some("1"));
    let a3 = wqed(d.path(), &["scatter", "--model", "l.json", "--in", "in.json"], Some("3"));
    assert!(a1.status.success() && a3.status.success());
    assert!(a1.stdout == a3.stdout, "output depends on the thread count");
    std::fs::write(d.path().join("a.json"), &a1.stdout).unwrap();

    let o = wqed(
        d.path(),
        &[
            "oracle", "--model", "l.json", "--in", "in.json", "--modes", "128", "--dk", "0.20943951023931953",
            "--k-center", "0", "--tend", "19", "--tbefore", "5", "--dt", "2", "--integrator", "chebyshev",
            "--out", "o.json",
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c = wqed(d.path(), &["compare", "--analytic", "a.json", "--oracle", "o.json"], None);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let v: Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["comparison"]["spectral_l2"].as_f64().unwrap() < 5e-2);

    // a tighter threshold turns the same comparison into a failed assertion
    let c = wqed(d.path(), &["compare", "--analytic", "a.json", "--oracle", "o.json", "--spectral-tol", "1e-4"], None);
    assert_eq!(c.status.code(), Some(1));
}

#[test]
fn acceptance_subset_runs() {
    let d = setup();
    let o = wqed(d.path(), &["acceptance", "--suite", "2,3,5"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    let o = wqed(d.path(), &["acceptance", "--suite", "2,x"], None);
    assert_eq!(o.status.code(), Some(2));
}
