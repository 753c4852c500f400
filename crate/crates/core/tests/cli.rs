use std::process::{Command, Output};

use rabi_spectrum::determinant::determinant_w;
use rabi_spectrum::holonomy::DEFAULT_TOL;
use rabi_spectrum::params::{kappa_from_x, ModelParams, Sector};
use serde_json::Value;

fn rabi2p(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rabi2p")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn w_re(v: &Value) -> f64 {
    v["w"][0].as_f64().unwrap()
}

#[test]
fn det_matches_library() {
    let v = json(&rabi2p(&["det", "--kappa", "0.5", "--mu", "0.25", "--chi", "1.4"]));
    let lib = determinant_w(&ModelParams::new(1.4, 0.5, 0.25, Sector::Even).unwrap(), DEFAULT_TOL).unwrap();
    assert_eq!(w_re(&v), lib.w.re);
    assert_eq!(v["branch"], "generic");
}

#[test]
fn odd_sector_flag() {
    let even = json(&rabi2p(&["det", "--kappa", "0.5", "--mu", "0.25", "--chi", "1.4"]));
    let odd = json(&rabi2p(&["det", "--kappa", "0.5", "--mu", "0.25", "--chi", "1.4", "--sector", "odd"]));
    assert_ne!(w_re(&even), w_re(&odd));
}

#[test]
fn physical_input_equals_spectral_input() {
    // ω = 1, g = 0.1 gives x = 2.5; ω₀ = 0.2 gives μ = 0.5.
    let kappa = kappa_from_x(2.5);
    let phys = json(&rabi2p(&["det", "--omega", "1", "--omega0", "0.2", "--g", "0.1", "--chi", "1.3"]));
    let spectral = json(&rabi2p(&["det", "--kappa", &kappa.to_string(), "--mu", "0.5", "--chi", "1.3"]));
    assert!((w_re(&phys) - w_re(&spectral)).abs() < 1e-12);
}

#[test]
fn energy_is_converted_to_chi() {
    let p = ModelParams::new(1.3, 0.5, 0.25, Sector::Even).unwrap();
    let v = json(&rabi2p(&["det", "--kappa", "0.5", "--mu", "0.25", "--energy", &p.energy().to_string()]));
    assert!((v["chi"].as_f64().unwrap() - 1.3).abs() < 1e-12);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# scenario\nkappa = 0.3\nmu=0.25\nchi=1.4\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let from_file = json(&rabi2p(&["det", "--config", cfg]));
    let direct = json(&rabi2p(&["det", "--kappa", "0.3", "--mu", "0.25", "--chi", "1.4"]));
    assert_eq!(w_re(&from_file), w_re(&direct));

    let overridden = json(&rabi2p(&["det", "--config", cfg, "--kappa", "0.5"]));
    let expected = json(&rabi2p(&["det", "--kappa", "0.5", "--mu", "0.25", "--chi", "1.4"]));
    assert_eq!(w_re(&overridden), w_re(&expected));
}

#[test]
fn malformed_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "kappa 0.5\n").unwrap();
    let out = rabi2p(&["det", "--config", cfg.to_str().unwrap(), "--mu", "1", "--chi", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scan_writes_csv_and_roots() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("w.csv");
    let roots = dir.path().join("roots.json");
    let out = rabi2p(&[
        "scan", "--kappa", "0.5", "--mu", "0.3333333333333333", "--chi-min", "0.8", "--chi-max", "1.2",
        "--points", "40", "--csv", csv.to_str().unwrap(), "--roots", roots.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut reader = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["chi", "re_w", "im_w", "abs_w", "branch"]);
    assert!(reader.records().count() >= 40);

    let v: Value = serde_json::from_str(&std::fs::read_to_string(&roots).unwrap()).unwrap();
    let chis: Vec<f64> = v["roots"].as_array().unwrap().iter().map(|r| r["chi"].as_f64().unwrap()).collect();
    assert_eq!(chis.len(), 2, "{chis:?}");
    assert!((chis[0] - 0.910967606193101).abs() < 1e-9);
}

#[test]
fn oracle_csv() {
    let out = rabi2p(&["oracle", "--kappa", "0.5", "--mu", "1", "--count", "4", "--sector", "even"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sector,index,chi,E,truncation_N"));
    assert_eq!(lines.filter(|l| l.starts_with("even,")).count(), 4);
}

#[test]
fn compare_reports_discrepancies() {
    let v = json(&rabi2p(&[
        "compare", "--kappa", "0.5", "--mu", "0.3333333333333333", "--chi-min", "0.8", "--chi-max", "1.2", "--points", "40",
    ]));
    let d = v["method_discrepancies"].as_array().unwrap();
    assert!(!d.is_empty());
    assert!(d.iter().all(|x| x["delta"].as_f64().unwrap() < 1e-8));
}

#[test]
fn compare_needs_two_methods() {
    let out = rabi2p(&["compare", "--kappa", "0.5", "--mu", "1", "--chi-min", "1", "--chi-max", "2", "--methods", "oracle"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle"));
}

#[test]
fn holonomy_json() {
    let v = json(&rabi2p(&["holonomy", "--kappa", "0.5", "--mu", "1", "--chi", "2"]));
    assert_eq!(v["classification"], "identity");
    assert_eq!(v["f_plus"].as_array().unwrap().len(), 2);
    assert_eq!(v["eigenpairs"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_and_conflicting_inputs_exit_2() {
    assert_eq!(rabi2p(&["det", "--kappa", "0.5", "--chi", "1.5"]).status.code(), Some(2));
    assert_eq!(rabi2p(&["det", "--kappa", "0.5", "--mu", "1", "--g", "0.1", "--chi", "1.5"]).status.code(), Some(2));
    assert_eq!(rabi2p(&["det", "--kappa", "0.5", "--mu", "1"]).status.code(), Some(2));
    assert_eq!(rabi2p(&["det", "--kappa", "0.5", "--mu", "1", "--chi", "1.5", "--sector", "sideways"]).status.code(), Some(2));
}
