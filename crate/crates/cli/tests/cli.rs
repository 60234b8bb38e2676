use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn bin(name: &str) -> Command {
    let path = match name {
        "catenoid" => env!("CARGO_BIN_EXE_catenoid"),
        "construct" => env!("CARGO_BIN_EXE_construct"),
        "verify" => env!("CARGO_BIN_EXE_verify"),
        "limitset" => env!("CARGO_BIN_EXE_limitset"),
        "render" => env!("CARGO_BIN_EXE_render"),
        _ => unreachable!(),
    };
    Command::new(path)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn")
}

fn ok(cmd: &mut Command) -> Output {
    let out = run(cmd);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// One N = 1 configuration shared by the tests that only read it.
fn shared() -> &'static (tempfile::TempDir, PathBuf) {
    static CELL: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("config.json");
        ok(bin("construct").args(["--n", "1", "-o"]).arg(&cfg));
        (dir, cfg)
    })
}

#[test]
fn catenoid_solve_reports_curve_and_residual() {
    let out = ok(bin("catenoid").args(["solve", "--neck", "0.5"]));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["a"], 0.5);
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
    let dl = v["dL"].as_f64().unwrap();
    assert!((dl - 1.0).abs() < 0.01, "{dl}");
    let samples = v["samples"].as_array().unwrap();
    assert!(samples.len() > 100);
    assert_eq!(samples[0].as_array().unwrap().len(), 2);
}

#[test]
fn catenoid_for_distance_counts_branches() {
    let two = ok(bin("catenoid").args(["for-distance", "--dL", "0.9"]));
    let v: Value = serde_json::from_slice(&two.stdout).unwrap();
    let sols = v.as_array().unwrap();
    assert_eq!(sols.len(), 2);
    for s in sols {
        assert!((s["dL"].as_f64().unwrap() - 0.9).abs() < 1e-8);
    }
    let none = ok(bin("catenoid").args(["for-distance", "--dL", "1.1"]));
    let v: Value = serde_json::from_slice(&none.stdout).unwrap();
    assert!(v.as_array().unwrap().is_empty());
}

#[test]
fn catenoid_thresholds_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    ok(bin("catenoid").args(["thresholds", "--tol", "1e-6", "-o"]).arg(&path));
    let v = json(&path);
    let (d0, d1) = (v["d0"].as_f64().unwrap(), v["d1"].as_f64().unwrap());
    assert!(d1 < d0);
    assert!((d0 - 1.0022859).abs() < 1e-5);
}

#[test]
fn construct_verify_render_round() {
    let (dir, cfg) = shared();
    let v = json(cfg);
    assert_eq!(v["version"], 1);
    assert_eq!(v["stations"].as_array().unwrap().len(), 2);

    let cert = dir.path().join("cert.json");
    let out = run(bin("verify").arg(cfg).arg("-o").arg(&cert));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c = json(&cert);
    assert_eq!(c["status"], "VALID");
    let criteria = c["criteria"].as_object().unwrap();
    assert!(criteria.len() >= 10);
    assert!(criteria.values().all(|x| x["pass"] == true));

    let svg = dir.path().join("out.svg");
    ok(bin("render").arg(cfg).arg("--certificate").arg(&cert).args(["--arrangement", "1", "-o"]).arg(&svg));
    let s = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(s.matches("<circle").count(), 4);
    assert_eq!(s.matches("<polyline").count(), 1);
    assert!(s.contains("VALID"));
}

#[test]
fn limitset_and_cloud_render() {
    let (dir, cfg) = shared();
    let cloud = dir.path().join("cloud.json");
    ok(bin("limitset").arg(cfg).args(["--prune-tol", "1e-3", "--max-depth", "40", "-o"]).arg(&cloud));
    let v = json(&cloud);
    for key in ["points", "depth", "prune_tol", "max_word_count", "version"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["prune_tol"], 1e-3);
    let pts = v["points"].as_array().unwrap();
    assert!(!pts.is_empty());
    assert_eq!(pts[0].as_array().unwrap().len(), 3);

    let svg = dir.path().join("ls.svg");
    ok(bin("render").arg("--cloud").arg(&cloud).arg("-o").arg(&svg));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<path d=\"M"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    ok(bin("construct").args(["--n", "1", "-o"]).arg(&a));
    ok(bin("construct").args(["--n", "1", "-o"]).arg(&b).env("RAYON_NUM_THREADS", "1"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let (sa, sb) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    ok(bin("render").arg(&a).arg("-o").arg(&sa));
    ok(bin("render").arg(&b).arg("-o").arg(&sb));
    assert_eq!(std::fs::read(&sa).unwrap(), std::fs::read(&sb).unwrap());
}

#[test]
fn perturbed_chain_gives_invalid_exit_code() {
    let (_, cfg) = shared();
    let dir = tempfile::tempdir().unwrap();
    let mut v = json(cfg);
    let r = &mut v["chain"]["radii"][3];
    *r = Value::from(r.as_f64().unwrap() * (1.0 + 1e-6));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let cert = dir.path().join("cert.json");
    let out = run(bin("verify").arg(&bad).arg("-o").arg(&cert));
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let c = json(&cert);
    assert_eq!(c["status"], "INVALID");
    assert_eq!(c["criteria"]["chain_orthogonality"]["pass"], false);
}

#[test]
fn malformed_input_gives_error_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"version\": 1,\n  \"spec\": [\n").unwrap();
    let out = run(bin("verify").arg(&bad).arg("-o").arg(dir.path().join("c.json")));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn construct_rejects_colliding_circles() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin("construct").args(["--n", "3", "--epsilon", "0.4", "-o"]).arg(dir.path().join("c.json")));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("collide"));
}

#[test]
fn render_accepts_pole_as_triple() {
    let (_, cfg) = shared();
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("p.svg");
    ok(bin("render").arg(cfg).args(["--pole", "0,0.6,0.8", "-o"]).arg(&svg));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
    let out = run(bin("render").arg(cfg).args(["--pole", "1,0", "-o"]).arg(dir.path().join("q.svg")));
    assert_eq!(out.status.code(), Some(1));
}
