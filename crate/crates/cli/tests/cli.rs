use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_layersolve"));
    c.env_remove("LAYERSOLVE_THREADS");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out-dir").arg(out).output().unwrap()
}

fn schema(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, file: &Path) {
    let instance: Value = serde_json::from_str(&std::fs::read_to_string(file).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema(schema_name)).unwrap();
    let msgs: Vec<String> = match compiled.validate(&instance) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "{} does not match {schema_name}: {msgs:?}", file.display());
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn painleve_writes_profiles_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["painleve", "--emit-plots"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for b in ["plus", "minus"] {
        assert_eq!(first_line(&dir.path().join(format!("painleve_{b}.csv"))), "s,Y,Yp");
        assert!(dir.path().join(format!("painleve_{b}.dat")).exists());
        assert_valid("painleve_profile", &dir.path().join(format!("painleve_{b}.json")));
    }
}

#[test]
fn composite_and_solve_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["composite", "--A-list", "1e5", "--branches", "PP"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(first_line(&dir.path().join("composite_A1p0000e5_PP.csv")), "x,u_ap,up,upp,E");
    assert_valid("composite_report", &dir.path().join("composite_A1p0000e5_PP.json"));

    let o = run(&["solve", "--A-list", "1e4", "--branches", "MP"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(first_line(&dir.path().join("solve_A1p0000e4_MP.csv")), "x,u,u_ap,phi");
    assert_valid("bvp_report", &dir.path().join("solve_A1p0000e4_MP.json"));
}

#[test]
fn negative_lower_bound_is_a_threshold_failure() {
    // Y- is negative up to s ~ 3, beyond the default inner zone D = 1.5
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["composite", "--A-list", "1e4", "--branches", "MM"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn spectrum_and_theory_reports_validate() {
    let dir = tempfile::tempdir().unwrap();
    for op in ["plus", "minus", "eta"] {
        let o = run(&["spectrum", "--operator", op], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert_valid("spectrum_report", &dir.path().join(format!("spectrum_{op}.json")));
    }
    let o = run(&["spectrum", "--A-list", "1e4", "--branches", "MM"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("spectrum_interval_A1p0000e4_MM.json");
    assert_valid("spectrum_report", &path);
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(rep["morse_index"], 2);

    let o = run(&["theory"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_valid("theory_report", &dir.path().join("theory.json"));
}

#[test]
fn single_a_sweep_reports_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", "--A-list", "1e4", "--branches", "PP,MM", "--seed", "7"], dir.path());
    // exponent thresholds cannot be checked without a fit
    assert_eq!(o.status.code(), Some(1));
    let path = dir.path().join("sweep.json");
    assert_valid("sweep_report", &path);
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(rep["seed"], 7);
    assert!(rep["fits"].as_object().unwrap().is_empty());
    assert!(rep["fit_errors"]["E_sup/PP"].as_str().unwrap().contains("at least 4"));
    assert!(rep["per_A"][0]["cells"][0]["metrics"]["residual"]["e_sup"].as_f64().unwrap() > 0.0);
    assert_eq!(first_line(&dir.path().join("sweep_cells.csv")).split(',').next(), Some("A"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["sweep", "--branches", "XY"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--A-list", "1e5,1e4"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["solve", "--A-list", "10"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["solve", "--delta", "0.7"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["bogus"], dir.path()).status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[sweep]\nunknown = 3\n").unwrap();
    let o = run(&["theory", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = bin().args(["theory", "--out-dir"]).arg(dir.path()).env("LAYERSOLVE_THREADS", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_is_honoured_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[sweep]\nA_list = [1e4]\nbranches = [\"PM\"]\n").unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--branches", "MP"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("solve_A1p0000e4_MP.csv").exists());
    assert!(!dir.path().join("solve_A1p0000e4_PM.csv").exists());
}

#[test]
fn newton_failure_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve", "--A-list", "1e4", "--branches", "PP", "--tol", "1e-30"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
