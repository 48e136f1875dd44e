use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hzeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hzeta")).args(args).env_remove("HZETA_THREADS").output().expect("run hzeta")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn count_small_bound() {
    let o = hzeta(&["count", "--bmax", "8"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "B,N,N/B\n8,6,0.75\n");
}

#[test]
fn count_decades_to_a_million() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counts.csv");
    let o = hzeta(&["count", "--bmax", "1e6", "--samples", "6", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[0], "B,N,N/B");
    let last: Vec<&str> = rows[6].split(',').collect();
    assert_eq!(last[1], "1722906");
    let ratio: f64 = last[2].parse().unwrap();
    assert!((ratio - 1.7421).abs() <= 0.03 * 1.7421);
    assert!(!csv.contains('\r'));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(hzeta(&["count"]).status.code(), Some(2));
    assert_eq!(hzeta(&["count", "--bmax", "abc"]).status.code(), Some(2));
    assert_eq!(hzeta(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hzeta(&["verify", "--p", "4"]).status.code(), Some(2));
    assert_eq!(hzeta(&["verify", "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn verify_default_grid_passes() {
    let o = hzeta(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["pass"], Value::Bool(true));
    assert_eq!(v["failures"], 0);
    let alias = hzeta(&["localft", "verify", "--p", "7", "--alpha", "1/7"]);
    assert_eq!(alias.status.code(), Some(0));
}

#[test]
fn verify_reports_a_perturbed_case() {
    let o = hzeta(&["verify", "--p", "2", "--inject-perturbation"]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    let cases = v["cases"].as_array().unwrap();
    let flagged: Vec<&Value> = cases.iter().filter(|c| c["perturbed"] == Value::Bool(true)).collect();
    assert_eq!(flagged.len(), 1);
    assert_eq!(flagged[0]["pass"], Value::Bool(false));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL p=2"));
}

#[test]
fn constant_flags_a_low_cutoff() {
    let o = hzeta(&["constant", "--pcut", "100", "--bmax", "1e4"]);
    let v = json(&o);
    assert_eq!(v["convergence_warning"], Value::Bool(true));
    assert_eq!(v["prime_cutoff"], 100);
}

#[test]
fn constant_routes_agree() {
    let o = hzeta(&["constant"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["euler_peyre_agree"], Value::Bool(true));
    assert_eq!(v["peyre_empirical_agree"], Value::Bool(true));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# counting run\nbmax = 27\nsamples = 2\n").unwrap();
    let o = hzeta(&["count", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
    let o = hzeta(&["count", "--config", cfg.to_str().unwrap(), "--bmax", "8", "--samples", "1"]);
    assert_eq!(stdout(&o), "B,N,N/B\n8,6,0.75\n");

    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "bmax 27\n").unwrap();
    assert_eq!(hzeta(&["count", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.conf");
    assert_eq!(hzeta(&["count", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let path = dir.path().join(name);
        let mut args = vec!["igusa", "--p", "3", "--d", "-2", "--e", "1", "--alpha", "1/27", "--s", "0.5,0.5", "--out"];
        args.push(path.to_str().unwrap());
        args.extend_from_slice(extra);
        assert!(hzeta(&args).status.success());
        fs::read(&path).unwrap()
    };
    assert_eq!(run("a.json", &[]), run("b.json", &[]));

    let count = |threads: &str| stdout(&hzeta(&["count", "--bmax", "1e5", "--samples", "3", "--threads", threads]));
    assert_eq!(count("1"), count("4"));
    let constant = |threads: &str| stdout(&hzeta(&["constant", "--pcut", "1000", "--bmax", "1e5", "--threads", threads]));
    assert_eq!(constant("1"), constant("3"));
}

#[test]
fn model_roundtrip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    assert!(hzeta(&["model", "dump", "--out", path.to_str().unwrap()]).status.success());
    let o = hzeta(&["model", "validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let mut model: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    model["character_embedding"] = serde_json::json!([1, 0]);
    let broken = dir.path().join("broken.json");
    fs::write(&broken, serde_json::to_string(&model).unwrap()).unwrap();
    let o = hzeta(&["model", "validate", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("exact-sequence"));

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    assert_ne!(hzeta(&["model", "validate", garbage.to_str().unwrap()]).status.code(), Some(0));
    assert!(!Path::new(&dir.path().join("nothing")).exists());
}

#[test]
fn igusa_reports_survivors() {
    let o = hzeta(&["igusa", "--p", "2", "--d", "-1", "--e", "-1", "--alpha", "1", "--s", "0.5,0.8"]);
    assert!(o.status.success());
    let v = json(&o);
    let expect = 1.0 - 2f64.powf(-0.5) - 2f64.powf(-0.8);
    let re = v["value"][0].as_f64().unwrap();
    assert!((re - expect).abs() < 1e-10, "{v}");
    let o = hzeta(&["igusa", "--p", "3", "--d", "1", "--e", "1", "--alpha", "1", "--s", "-0.5,1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn z1probe_runs() {
    let o = hzeta(&["z1probe", "--s", "2.2,1.0", "--alpharange", "20", "--tgrid", "97"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["partial_sums"].as_array().unwrap().len(), 3);
    assert_eq!(v["ranges"], serde_json::json!([5, 10, 20]));
    assert_eq!(v["cauchy_ok"], Value::Bool(true));
    assert_eq!(v["aliasing_warning"], Value::Bool(false));
    let coarse = hzeta(&["z1probe", "--s", "2.2,1.0", "--alpharange", "20", "--tgrid", "25"]);
    assert!(String::from_utf8_lossy(&coarse.stderr).contains("under-resolves"));
    let o = hzeta(&["z1probe", "--s", "0.1,0.1"]);
    assert_eq!(o.status.code(), Some(1));
}
