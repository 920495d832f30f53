use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cokdv")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &TempDir, name: &str, doc: &Value) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, serde_json::to_string_pretty(doc).unwrap()).unwrap();
    p
}

fn cmd(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    run(&args)
}

fn simulation(dt: Option<f64>, t_end: f64) -> Value {
    json!({
        "seed": 3,
        "simulate": {
            "n_max": 16,
            "dt": dt,
            "t_end": t_end,
            "initial": {"kind": "random", "seed": 5, "s": 1.0, "amplitude": 0.1, "support": 4}
        }
    })
}

#[test]
fn simulate_writes_trajectory_and_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sim.json", &simulation(None, 0.05));
    let out = dir.path().join("run");
    let o = cmd("simulate", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("status=ok command=simulate"));
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.lines().count() >= 3);
    assert!(out.join("snapshots").is_dir());
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 3);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn simulate_rejects_unstable_step() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sim.json", &simulation(Some(0.5), 1.0));
    let o = cmd("simulate", &cfg, &dir.path().join("run"), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("stability bound"), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("status=fail"));
}

#[test]
fn simulate_rejects_zero_horizon() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sim.json", &simulation(None, 0.0));
    assert_eq!(code(&cmd("simulate", &cfg, &dir.path().join("run"), &[])), 1);
}

#[test]
fn simulate_reports_divergence() {
    let dir = TempDir::new().unwrap();
    let doc = json!({"simulate": {
        "n_max": 8, "dt": 5.0, "t_end": 5000.0, "stability_factor": 1e12,
        "initial": {"kind": "random", "seed": 1, "s": 0.0, "amplitude": 1.0}
    }});
    let cfg = write_config(&dir, "sim.json", &doc);
    let out = dir.path().join("run");
    let o = cmd("simulate", &cfg, &out, &[]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(out.join("error.json").exists() && out.join("manifest.json").exists());
}

#[test]
fn missing_config_and_busy_output_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let o = cmd("contract", &dir.path().join("absent.json"), &dir.path().join("run"), &[]);
    assert_eq!(code(&o), 1);
    let busy = dir.path().join("busy");
    fs::create_dir(&busy).unwrap();
    fs::write(busy.join("x"), "x").unwrap();
    let cfg = write_config(&dir, "sim.json", &simulation(None, 0.01));
    assert_eq!(code(&cmd("simulate", &cfg, &busy, &[])), 1);
    assert_eq!(code(&run(&["simulate", "--out", dir.path().join("r").to_str().unwrap()])), 1);
}

#[test]
fn identical_seed_gives_identical_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sim.json", &simulation(None, 0.02));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&cmd("simulate", &cfg, &a, &["--seed", "9"])), 0);
    assert_eq!(code(&cmd("simulate", &cfg, &b, &["--seed", "9", "--threads", "1"])), 0);
    for f in ["diagnostics.csv", "config.json", "snapshots/000000.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    assert_eq!(code(&cmd("simulate", &cfg, &c, &["--seed", "10"])), 0);
    assert_ne!(fs::read(a.join("config.json")).unwrap(), fs::read(c.join("config.json")).unwrap());
}

#[test]
fn default_verify_suite_passes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("v");
    let o = run(&["verify", "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), fs::read_to_string(out.join("verify.csv")).unwrap_or_default());
    assert!(stdout(&o).contains("failed=0"));
    assert!(out.join("verify.json").exists());
}

fn small_verify() -> Value {
    json!({"verify": {
        "n_max": 8, "n_cut": 4, "t_values": [0.0, 0.37, 2.0], "samples": 4,
        "equivalence_samples": 2, "control_samples": 2,
        "residuals": {"n_max": 8, "dt": 5e-4, "t_end": 5e-3,
            "initial": {"kind": "random", "seed": 4, "s": 1.0, "amplitude": 0.3, "support": 4}},
        "residual_n_cut": 3
    }})
}

#[test]
fn injected_corruption_fails_verification() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "v.json", &small_verify());
    let out = dir.path().join("v");
    let o = cmd("verify", &cfg, &out, &["--suite", "identities", "--inject-corruption", "resonant_sign"]);
    assert_eq!(code(&o), 3);
    let csv = fs::read_to_string(out.join("verify.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains("r3 = r3res_closed + r3nres") && l.ends_with("false")));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn unknown_suite_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = run(&["verify", "--suite", "everything", "--out", dir.path().join("v").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn residual_suite_alone() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "v.json", &small_verify());
    let out = dir.path().join("v");
    assert_eq!(code(&cmd("verify", &cfg, &out, &["--suite", "residuals"])), 0);
    let csv = fs::read_to_string(out.join("verify.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("residual")).count(), 4);
}

fn contract_config(t_star: f64) -> Value {
    json!({"contract": {
        "solver": {"n_max": 16, "n_cut": 8, "t_star": t_star, "m_grid": 17, "radius_a": 0.5,
                   "s": 1.0, "tol": 1e-12, "max_iter": 40, "which": "FirstForm"},
        "initial": {"kind": "random", "seed": 2, "s": 1.0, "amplitude": 0.05, "support": 4},
        "lipschitz_samples": 2
    }})
}

#[test]
fn contract_converges() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", &contract_config(0.05));
    let out = dir.path().join("c");
    let o = cmd("contract", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep: Value = serde_json::from_str(&fs::read_to_string(out.join("solver_report.json")).unwrap()).unwrap();
    assert!(rep["iterations"].as_u64().unwrap() <= 40);
    assert_eq!(rep["escaped_ball"], false);
    assert!(rep["lipschitz_estimate"].as_f64().unwrap() < 0.5);
    assert!(out.join("agreement.json").exists());
}

#[test]
fn contract_long_horizon_fails() {
    let dir = TempDir::new().unwrap();
    let mut doc = contract_config(10.0);
    doc["contract"]["initial"]["amplitude"] = json!(1.0);
    doc["contract"]["initial"]["support"] = Value::Null;
    let cfg = write_config(&dir, "c.json", &doc);
    let out = dir.path().join("c");
    let o = cmd("contract", &cfg, &out, &[]);
    assert_eq!(code(&o), 4, "{}", stdout(&o));
    assert!(out.join("solver_report.json").exists());
}

fn bounds_config(n_values: Value) -> Value {
    json!({"bounds": {"estimates": [{"op": "B2Q", "s": 0.0}], "n_values": n_values, "samples": 16}})
}

#[test]
fn bounds_table_for_b2q() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "b.json", &bounds_config(json!([8, 16, 32, 64])));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = cmd("bounds", &cfg, &a, &["--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(a.join("bounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let slope: f64 = csv.lines().nth(1).unwrap().split(',').nth(5).unwrap().parse().unwrap();
    assert!((slope + 1.0).abs() < 0.3, "{slope}");
    assert_eq!(code(&cmd("bounds", &cfg, &b, &["--seed", "1", "--threads", "2"])), 0);
    assert_eq!(fs::read(a.join("bounds.csv")).unwrap(), fs::read(b.join("bounds.csv")).unwrap());
    assert_eq!(fs::read(a.join("bounds.json")).unwrap(), fs::read(b.join("bounds.json")).unwrap());
}

#[test]
fn bounds_need_four_cutoffs() {
    let dir = TempDir::new().unwrap();
    for (i, n) in [json!([16]), json!([])].into_iter().enumerate() {
        let cfg = write_config(&dir, &format!("b{i}.json"), &bounds_config(n));
        assert_eq!(code(&cmd("bounds", &cfg, &dir.path().join(format!("o{i}")), &[])), 1);
    }
}

#[test]
fn converge_reports_decreasing_errors() {
    let dir = TempDir::new().unwrap();
    let doc = json!({"converge": {
        "base": {"n_max": 64, "t_end": 0.2, "initial": {"kind": "random", "seed": 9, "s": 2.0, "amplitude": 0.1}},
        "n_list": [8, 16, 32]
    }});
    let cfg = write_config(&dir, "k.json", &doc);
    let out = dir.path().join("k");
    let o = cmd("converge", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let rep: Value = serde_json::from_str(&fs::read_to_string(out.join("convergence.json")).unwrap()).unwrap();
    assert_eq!(rep["strictly_decreasing"], true);
}
