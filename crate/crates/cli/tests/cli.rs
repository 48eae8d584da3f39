use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn manifest(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests").join(name)
}

fn hmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmatch")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Toy campaign run into a fresh directory.
fn toy_campaign() -> (TempDir, PathBuf) {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("camp");
    let o = hmatch(&["match", "--manifest", s(&manifest("toy1d.toml")), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    (tmp, out)
}

#[test]
fn midpoint_run_has_every_column() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sim");
    let o = hmatch(&["simulate", "--manifest", s(&manifest("crosstalk_dataset_a.toml")), "--midpoint", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(out.join("outputs.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), 65);
    assert_eq!(lines[1].split(',').count(), 65);
    assert!(out.join("manifest.toml").exists());
}

#[test]
fn designs_repeat_for_a_fixed_seed() {
    let tmp = TempDir::new().unwrap();
    let run = |dir: &str| {
        let out = tmp.path().join(dir);
        let o = hmatch(&["simulate", "--manifest", s(&manifest("toy1d.toml")), "--design", "2000", "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read(out.join("outputs.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 2001);
}

#[test]
fn out_of_domain_point_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let pts = tmp.path().join("pts.txt");
    fs::write(&pts, "x\n1.0\n12.5\n").unwrap();
    let out = tmp.path().join("sim");
    let o = hmatch(&["simulate", "--manifest", s(&manifest("toy1d.toml")), "--points", s(&pts), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("x = 12.5"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn bad_point_token_reports_its_line() {
    let tmp = TempDir::new().unwrap();
    let pts = tmp.path().join("pts.txt");
    fs::write(&pts, "1.0\nabc\n").unwrap();
    let out = tmp.path().join("sim");
    let o = hmatch(&["simulate", "--manifest", s(&manifest("toy1d.toml")), "--points", s(&pts), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn manifest_errors_report_their_line() {
    let tmp = TempDir::new().unwrap();
    let m = tmp.path().join("m.toml");
    fs::write(&m, "simulator = \"toy1d\"\nseed = 1\nbogus = 3\n").unwrap();
    let o = hmatch(&["design", "--manifest", s(&m), "--runs", "5", "--out", s(&tmp.path().join("d"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn design_writes_requested_rows() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("d");
    let o = hmatch(&["design", "--manifest", s(&manifest("toy1d.toml")), "--runs", "7", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("design.csv")).unwrap().lines().count(), 8);
}

#[test]
fn rerunning_a_campaign_reproduces_the_ledger() {
    let (tmp, out) = toy_campaign();
    let again = tmp.path().join("again");
    let o = hmatch(&["match", "--manifest", s(&manifest("toy1d.toml")), "--out", s(&again)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(out.join("ledger.csv")).unwrap(),
        fs::read_to_string(again.join("ledger.csv")).unwrap()
    );
    // the same directory is not silently overwritten
    let o = hmatch(&["match", "--manifest", s(&manifest("toy1d.toml")), "--out", s(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn interrupted_campaign_resumes() {
    let (_tmp, out) = toy_campaign();
    let before = fs::read_to_string(out.join("ledger.csv")).unwrap();
    fs::remove_dir_all(out.join("wave_02")).unwrap();
    fs::remove_file(out.join("status.json")).unwrap();
    let o = hmatch(&["match", "--manifest", s(&manifest("toy1d.toml")), "--out", s(&out), "--resume"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("ledger.csv")).unwrap(), before);
}

#[test]
fn unreachable_target_empties_the_region() {
    let tmp = TempDir::new().unwrap();
    let text = fs::read_to_string(manifest("toy1d.toml")).unwrap().replace("z = -0.3", "z = 5.0");
    let m = tmp.path().join("m.toml");
    fs::write(&m, text).unwrap();
    let o = hmatch(&["match", "--manifest", s(&m), "--out", s(&tmp.path().join("camp"))]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn analyses_run_on_an_archived_campaign() {
    let (tmp, camp) = toy_campaign();
    for (name, file) in [
        ("variance-resolution", "variance-resolution.csv"),
        ("pass-proportions", "pass-proportions.csv"),
    ] {
        let out = tmp.path().join(name);
        let o = hmatch(&["analyze", name, "--from", s(&camp), "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        let text = fs::read_to_string(out.join(file)).unwrap();
        assert!(text.lines().count() >= 2, "{name}: {text}");
    }
}

#[test]
fn unknown_analysis_is_a_usage_error() {
    let o = hmatch(&["analyze", "entropy", "--from", "nowhere"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("variance-resolution"), "{}", stderr(&o));
}

#[test]
fn analysis_without_archive_creates_nothing() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = tmp.path().join("out");
    let o = hmatch(&["analyze", "pass-proportions", "--from", s(&empty), "--manifest", s(&manifest("toy1d.toml")), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("hmatch match"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn diagnose_and_sample_read_a_campaign() {
    let (tmp, camp) = toy_campaign();
    let diag = tmp.path().join("diag");
    let o = hmatch(&["diagnose", "--from", s(&camp), "--out", s(&diag)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(diag.join("diagnostics.csv").exists());
    assert!(diag.join("safety.csv").exists());

    let smp = tmp.path().join("smp");
    let o = hmatch(&["sample", "--from", s(&camp), "--count", "50", "--out", s(&smp)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(smp.join("samples.csv")).unwrap().lines().count(), 51);
}
