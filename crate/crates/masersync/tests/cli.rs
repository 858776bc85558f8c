use std::path::Path;
use std::process::{Command, Output};

fn masersync(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_masersync")).args(args).current_dir(cwd).output().unwrap()
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

#[test]
fn steady_reports_every_measure() {
    let dir = tempfile::tempdir().unwrap();
    let out = masersync(
        &["steady", "--N", "5", "--theta", "2", "--eps", "0.1", "--coupling", "dissipative", "--dump-phase", "p.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["S_quantum", "S_perturb", "S_semiclassical", "mutual_info", "log_negativity", "fano"] {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        assert!(!line.ends_with('-'), "{line}");
    }
    let phase = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(phase.starts_with("phi,probability\n"));
}

#[test]
fn sweep_writes_configured_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("n_scan.json");
    let out = masersync(&["sweep", "--config", config.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("n_scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "theta,N,eps,coupling,S_perturb,S_semiclassical,status");
    assert_eq!(lines.count(), 4);
}

#[test]
fn sweep_without_output_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = masersync(&["sweep", "--N", "5", "--theta", "2", "--eps", "0.01"], dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
}

#[test]
fn failed_measure_gives_partial_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = masersync(&["steady", "--N", "0", "--phi", "1", "--eps", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().contains("S_quantum        "));
}

#[test]
fn bad_configuration_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"n_atoms": [5.0], "unknown": 1}"#).unwrap();
    let out = masersync(&["sweep", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = masersync(&["steady", "--N", "5", "--theta", "2", "--eps=-1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = masersync(&["steady", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = masersync(&["check"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn perturb_reports_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        masersync(&["perturb", "--N", "5", "--theta", "2", "--eps", "1e-3", "--coupling", "coherent"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("C0"));
}
