use std::path::Path;
use std::process::{Command, Output};

use lapscat::field::parse_field;
use lapscat::geometry::load_mesh;
use lapscat::pipeline::RunConfig;

fn lapscat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lapscat")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut RunConfig)) -> String {
    let mut cfg = RunConfig::sphere_preset(0.5);
    cfg.output.directory = dir.join("out");
    cfg.verification.ladder = vec![1.0, 0.7, 0.5];
    edit(&mut cfg);
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_writes_artifacts_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", |_| {});
    let out = lapscat(&["solve", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let od = dir.path().join("out");
    let mesh = load_mesh(od.join("mesh.txt")).unwrap();
    let (mesh_ref, values) = parse_field(&std::fs::read_to_string(od.join("field.txt")).unwrap()).unwrap();
    assert_eq!(mesh_ref, "mesh.txt");
    assert_eq!(values.len(), mesh.num_vertices());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(od.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["lap"]["verdict"], "converged");
    for name in ["radiation_residual", "flux_imaginary", "lap_convergence"] {
        let c = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap();
        assert_eq!(c["verdict"], "pass", "{name}");
    }
    let csv = std::fs::read_to_string(od.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("epsilon,norm,increment,order_estimate"));
}

#[test]
fn hypothesis_violations_exit_with_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let weak = write_config(dir.path(), "weak.toml", |c| {
        c.lap.weight_exponent = 0.5;
    });
    let out = lapscat(&["solve", &weak]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceed 1"));

    let tail = write_config(dir.path(), "tail.toml", |c| {
        c.coefficients.preset = "power_tail".into();
        c.coefficients.tail_exponent = Some(2.5);
    });
    let out = lapscat(&["solve", &tail]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s > 3"));

    let missing = dir.path().join("nope.toml");
    assert_eq!(lapscat(&["mesh-info", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lapscat(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn mesh_info_and_decay_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", |_| {});
    let saved = dir.path().join("saved.txt");
    let out = lapscat(&["mesh-info", &cfg, "--save", saved.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let mesh = load_mesh(&saved).unwrap();
    assert_eq!(report["mesh"]["vertices"], mesh.num_vertices());

    let out = lapscat(&["decay-check", &cfg, "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["decay"]["passed"], true);
}

#[test]
fn oracle_compare_needs_a_sphere_with_identity_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "aniso.toml", |c| c.coefficients.preset = "aniso_core".into());
    let out = lapscat(&["oracle-compare", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}
