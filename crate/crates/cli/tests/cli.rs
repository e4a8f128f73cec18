use std::path::Path;
use std::process::{Command, Output};

fn shearlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shearlab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const TINY: &str = r#"
seed = 5

[domain]
kind = "channel"
nx = 4
nz = 4

[model]
kind = "smagorinsky"
nu = 0.01
cs = 0.17

[stepping]
dt = 0.01
t_final = 0.05

[outputs]
dir = "out"
"#;

#[test]
fn point_bounds_match_direct_substitution() {
    let out = shearlab(&["bounds", "--re", "1e300", "--h", "1", "--cs", "1", "--delta", "1"]);
    assert!(out.status.success());
    let v = json(&out);
    let r = &v["under_resolved"];
    assert!((r["thm2"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(r["region"], "II");
}

#[test]
fn zero_model_length_has_no_under_resolved_bound() {
    let out = shearlab(&["bounds", "--re", "100", "--h", "0.001", "--cs", "0"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["under_resolved"].is_null());
    assert_eq!(v["resolved"]["value"].as_f64().unwrap(), 1.0);
}

#[test]
fn bad_inputs_exit_with_config_code() {
    let out = shearlab(&["bounds", "--re=-1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = shearlab(&["bounds", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "seed = 1\n[domain]\nkind = \"torus\"\n");
    let out = shearlab(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let out = shearlab(&["run", "--config", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_string_lossy().into_owned();
    let out = shearlab(&["bounds", "--sweep", "--out", &d, "--re-range", "100", "1e4", "3", "--h-range", "1e-3", "0.1", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let surface = std::fs::read_to_string(dir.path().join("surface.csv")).unwrap();
    assert_eq!(surface.lines().next().unwrap(), "re,h,cs_delta,lambda1,lambda2,lambda3,bound,region");
    assert_eq!(surface.lines().count(), 1 + 12);
    assert!(dir.path().join("minimizer_reference.json").exists());
}

#[test]
fn mesh_and_run_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.toml", TINY);
    let mdir = dir.path().join("m").to_string_lossy().into_owned();
    let out = shearlab(&["mesh", "--config", &cfg, "--out", &mdir]);
    assert!(out.status.success());
    assert_eq!(json(&out)["mesh"]["triangles"], 32);
    assert!(Path::new(&mdir).join("mesh.vtk").exists());

    let out = shearlab(&["--sequential", "run", "--config", &cfg, "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["steps_completed"], 5);
    assert!(v["c_eps"].is_f64() && v["bound"]["bound"].is_f64());
    let run = dir.path().join("out");
    for f in ["summary.json", "series.csv", "final.vtk", "final.chk", "config.toml"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let written = std::fs::read_to_string(run.join("config.toml")).unwrap();
    assert!(written.contains("seed = 9"));
}

#[test]
fn sequential_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.toml", TINY);
    let a = dir.path().join("a").to_string_lossy().into_owned();
    let b = dir.path().join("b").to_string_lossy().into_owned();
    assert!(shearlab(&["--sequential", "run", "--config", &cfg, "--out", &a]).status.success());
    assert!(shearlab(&["--sequential", "run", "--config", &cfg, "--out", &b]).status.success());
    let read = |d: &str| std::fs::read_to_string(Path::new(d).join("series.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_string_lossy().into_owned();
    let out = shearlab(&["verify", "--seed", "11", "--out", &d]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["seed"], 11);
    assert!(v["checks"].as_array().unwrap().len() >= 9);
    assert!(dir.path().join("verify.json").exists());
}
