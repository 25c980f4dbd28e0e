use std::path::Path;
use std::process::{Command, Output};

fn photonsrc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photonsrc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

const STEADY_SMALL: &str = r#"
[model]
kind = "two_photon_jc"
g_per_kappa = 10.0
gamma_per_kappa = 0.5
gamma_phi_per_kappa = 0.5

[model.pulse]
shape = "constant"
epsilon0_per_kappa = 1.0

[pipeline]
kind = "fig1c"

[[pipeline.axes]]
parameter = "g_per_kappa"
values = [2.0, 10.0]

[output]
formats = ["csv", "json"]
"#;

#[test]
fn spectrum_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = photonsrc(&["spectrum", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("run/spectrum.csv")).unwrap();
    assert!(csv.starts_with("g_per_kappa,state,manifold,"));
    let m = manifest(&dir.path().join("run"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["outputs"][0], "spectrum.csv");
    assert!(m["conventions"]["collapse_scalings"].is_string());
}

#[test]
fn invalid_config_exits_2_and_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "[model]\nlambda = 2\ng_per_kappa = -1\n[numerics]\nrel_tol = 0\n",
    )
    .unwrap();
    let out = photonsrc(&["pulse", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.lambda"), "{err}");
    assert!(err.contains("model.g_per_kappa"), "{err}");
    assert!(err.contains("numerics.rel_tol"), "{err}");
}

#[test]
fn toml_syntax_error_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[model\n").unwrap();
    let out = photonsrc(&["spectrum", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn missing_config_file_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = photonsrc(&["spectrum", "--config", "nope.toml"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn cutoff_guard_abort_records_failure_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = photonsrc(&["pulse", "--fock-cutoff", "3", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let m = manifest(&dir.path().join("run"));
    assert_eq!(m["status"], "failed");
    assert!(m["failure"].as_str().unwrap().contains("cutoff"));
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("steady.toml"), STEADY_SMALL).unwrap();
    let first = photonsrc(&["steady", "--config", "steady.toml", "--out", "a"], dir.path());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let second = photonsrc(&["steady", "--config", "a/manifest.json", "--out", "b"], dir.path());
    assert_eq!(second.status.code(), Some(0), "{}", String::from_utf8_lossy(&second.stderr));
    let outputs = manifest(&dir.path().join("a"))["outputs"].clone();
    let files: Vec<&str> = outputs
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(
        files,
        ["steady.csv", "steady.json", "occupations.csv", "occupations.json"]
    );
    for f in files {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn strict_promotes_warnings_to_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = photonsrc(
        &["spectrum", "--fock-cutoff", "8", "--strict", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let m = manifest(&dir.path().join("run"));
    assert_eq!(m["status"], "failed");
    assert!(!m["warnings"].as_array().unwrap().is_empty());
}
