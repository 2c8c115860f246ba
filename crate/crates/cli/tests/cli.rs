use std::path::Path;
use std::process::{Command, Output};

const FREE: &str = r#"
name = "free"

[[particles]]
mass = 1.0
charge = 0.0
x0 = [0.0, 0.1, 0.0, 0.0]
p_spatial = [0.3, -0.1, 0.2]

[integrator]
step = 0.05
tau_span = [0.0, 1.0]
"#;

fn relform(args: &[&str], out: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_relform"));
    c.args(args).env_remove("RELFORM_OUT");
    if let Some(o) = out {
        c.env("RELFORM_OUT", o);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn free_particle_moves_on_a_straight_line() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("free.toml");
    std::fs::write(&scen, FREE).unwrap();
    let out = dir.path().join("out");
    let o = relform(&["simulate", "--scenario", scen.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 3);
    for w in rows.windows(3) {
        for c in 1..5 {
            let d1 = (w[1][c] - w[0][c]) / (w[1][0] - w[0][0]);
            let d2 = (w[2][c] - w[1][c]) / (w[2][0] - w[1][0]);
            assert!((d1 - d2).abs() < 1e-10, "column {c}: {d1} vs {d2}");
        }
        for c in 5..9 {
            assert!((w[0][c] - w[2][c]).abs() < 1e-12);
        }
    }
    assert!(out.join("trajectory.manifest.json").exists());
}

#[test]
fn null_cone_lattice_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("null.toml");
    std::fs::write(&scen, format!("{FREE}\n[lattice]\ndims = [2, 2, 2, 2]\nspacing = 1.0\noffset = 0.0\n")).unwrap();
    let o = relform(&["simulate", "--scenario", scen.to_str().unwrap()], Some(dir.path()));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("null cone"));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = relform(&["simulate", "--scenario", "/nonexistent/relform.toml"], Some(dir.path()));
    assert_eq!(code(&o), 5);
}

#[test]
fn malformed_toml_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("bad.toml");
    std::fs::write(&scen, "[[particles]\nmass = ").unwrap();
    let o = relform(&["simulate", "--scenario", scen.to_str().unwrap()], Some(dir.path()));
    assert_eq!(code(&o), 2);
}

#[test]
fn refine_levels_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = relform(&["verify", "algebra", "--points", "1", "--refine", "1"], Some(dir.path()));
    assert_eq!(code(&o), 2);
}

#[test]
fn empty_sweep_and_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("sweep.toml");
    std::fs::write(&m, "").unwrap();
    let out = dir.path().join("env-out");
    let o = relform(&["sweep", "--manifest", m.to_str().unwrap()], Some(&out));
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("sweep-summary.json")).unwrap()).unwrap();
    assert_eq!(v["body"]["cells"].as_array().unwrap().len(), 0);
    assert_eq!(v["pass"], true);
}

#[test]
fn distributions_verify_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = relform(&["verify", "distributions"], Some(dir.path()));
    assert_eq!(code(&o), 0);
    let file = dir.path().join("verify-distributions.json");
    let r = relform(&["report", file.to_str().unwrap()], None);
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stdout).starts_with("PASS"));
}
