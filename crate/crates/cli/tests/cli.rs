use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn config(mu: f64, theta_nodes: usize, seed: u64, out: &Path) -> String {
    format!(
        r#"
[state]
profile = "lorentzian"
scale = 1.0
modes = [{{ k = 1, re = 0.05 }}]
decay = "analytic"
decay_rate = 0.9

[grid]
dt = 0.05
t_max = 20.0
theta_nodes = {theta_nodes}
omega_nodes = 33
omega_rule = "auto"
mass_tol = 1e-8

[solver]
mu = {mu:?}
weight = "exponential"
weight_rate = 0.9
tail_budget = 1e-6

[fit]
window = [2.0, 15.0]

[particles]
n = 2000
dt = 0.02
seed = {seed}
t_max = 2.0

[output]
dir = "{}"
"#,
        out.display()
    )
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn dephase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dephase")).args(args).env_remove("DEPHASE_OUT_DIR").output().unwrap()
}

fn column(csv: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn uncoupled_solve_reproduces_free_decay() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(&dir, "c.toml", &config(0.0, 16, 1, &out));
    let o = dephase(&["solve", "-q", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = out.join("order_parameter.csv");
    let header = fs::read_to_string(&csv).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,re_z,im_z,R,phi");
    let t = column(&csv, "t");
    let r = column(&csv, "R");
    for (t, r) in t.iter().zip(&r) {
        assert!((r - 0.05 * (-t).exp()).abs() < 1e-14);
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for key in [
        "config_echo",
        "norms",
        "cauchy_ratios",
        "contraction",
        "estimrn_check",
        "lemma_ratios",
        "decay_fit",
        "envelope",
        "tail_bounds",
        "schema_version",
    ] {
        assert!(summary.get(key).is_some(), "missing {}", key);
    }
    let rate = summary["decay_fit"]["order_parameter"]["rate"].as_f64().unwrap();
    assert!((rate - 1.0).abs() < 1e-9);
    let ledger: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ledger.json")).unwrap()).unwrap();
    assert_eq!(ledger["entries"].as_array().unwrap().len(), 1);
}

#[test]
fn strong_coupling_reports_non_convergence() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(&dir, "c.toml", &config(10.0, 16, 1, &out));
    let o = dephase(&["solve", "-q", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let ledger: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ledger.json")).unwrap()).unwrap();
    assert!(ledger["entries"].is_array());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(&dir, "bad.toml", "[state]\nprofile = \"cauchy\"\n");
    assert_eq!(dephase(&["solve", bad.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    assert_eq!(dephase(&["solve", missing.to_str().unwrap()]).status.code(), Some(2));
    let out = dir.path().join("out");
    let coarse = write_config(&dir, "coarse.toml", &config(0.05, 4, 1, &out));
    let o = dephase(&["verify", coarse.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert_eq!(dephase(&["solve", coarse.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn kinetic_outputs_do_not_depend_on_particle_seed() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for seed in [1u64, 2, 3] {
        let out = dir.path().join(format!("out{seed}"));
        let cfg = write_config(&dir, &format!("c{seed}.toml"), &config(0.05, 16, seed, &out));
        let o = dephase(&["solve", "-q", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let o = dephase(&["simulate", "-q", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let kinetic = column(&out.join("comparison.csv"), "R");
        outputs.push((fs::read(out.join("order_parameter.csv")).unwrap(), kinetic, fs::read(out.join("particles.csv")).unwrap()));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    assert_eq!(outputs[1].0, outputs[2].0);
    assert_eq!(outputs[0].1, outputs[2].1);
    assert_ne!(outputs[0].2, outputs[1].2);
}

#[test]
fn output_directory_can_be_overridden() {
    let dir = TempDir::new().unwrap();
    let configured = dir.path().join("configured");
    let overridden = dir.path().join("overridden");
    let cfg = write_config(&dir, "c.toml", &config(0.0, 16, 1, &configured));
    let o = Command::new(env!("CARGO_BIN_EXE_dephase"))
        .args(["solve", "-q", cfg.to_str().unwrap()])
        .env("DEPHASE_OUT_DIR", &overridden)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(overridden.join("summary.json").exists());
    assert!(!configured.exists());
}

#[test]
fn fit_recovers_rate_from_csv() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("r.csv");
    let mut text = String::from("t,R\n");
    for i in 0..=200 {
        let t = i as f64 * 0.1;
        text.push_str(&format!("{:.16e},{:.16e}\n", t, 0.3 * (-0.7 * t).exp()));
    }
    fs::write(&csv, text).unwrap();
    let o = dephase(&["fit", csv.to_str().unwrap(), "--kind", "exponential", "--window", "2,15"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["model"]["rate"].as_f64().unwrap() - 0.7).abs() < 1e-10);
    assert_eq!(dephase(&["fit", csv.to_str().unwrap(), "--kind", "stretched"]).status.code(), Some(2));
}
