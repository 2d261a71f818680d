use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use carnot::cli::run;
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn carnot(args: &[&str]) -> i32 {
    let mut argv = vec!["carnot"];
    argv.extend_from_slice(args);
    run(argv)
}

/// The single run directory created under `root`.
fn run_dir(root: &Path) -> PathBuf {
    let mut dirs: Vec<_> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.pop().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

#[test]
fn theorem_writes_report_levels_and_field() {
    let out = tempfile::tempdir().unwrap();
    let root = out.path().to_str().unwrap();
    assert_eq!(
        carnot(&["theorem", "--config", &cfg("heis-hlap.json"), "--out", root]),
        0
    );
    let dir = run_dir(out.path());
    let report = read_json(&dir.join("report.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["levels"].as_array().unwrap().len(), 9);
    let levels: Vec<_> = fs::read_dir(dir.join("levels")).unwrap().collect();
    assert_eq!(levels.len(), 9);
    let header = fs::read_to_string(dir.join("levels/level-0.5000.csv")).unwrap();
    assert!(header.starts_with("u0,u1,u2,lambda,margin"));
    let meta = read_json(&dir.join("field.meta.json"));
    let counts: Vec<usize> = serde_json::from_value(meta["grid"]["counts"].clone()).unwrap();
    let values = carnot::io::read_field_values(&dir.join("field.bin")).unwrap();
    assert_eq!(values.len(), counts.iter().product::<usize>());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let code = carnot(&[
            "solve",
            "--config",
            &cfg("heis-hlap.json"),
            "--out",
            d.path().to_str().unwrap(),
            "grid.counts=[21]",
        ]);
        assert_eq!(code, 0);
    }
    let (da, db) = (run_dir(a.path()), run_dir(b.path()));
    assert_eq!(da.file_name(), db.file_name());
    for f in ["report.json", "field.bin", "field.meta.json", "config.json"] {
        assert_eq!(
            fs::read(da.join(f)).unwrap(),
            fs::read(db.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn overrides_change_the_run_directory() {
    let out = tempfile::tempdir().unwrap();
    let root = out.path().to_str().unwrap();
    assert_eq!(
        carnot(&["fundsol", "--config", &cfg("heis-hlap.json"), "--out", root]),
        0
    );
    assert_eq!(
        carnot(&[
            "fundsol",
            "--config",
            &cfg("heis-hlap.json"),
            "--out",
            root,
            "seed=3"
        ]),
        0
    );
    assert_eq!(fs::read_dir(out.path()).unwrap().count(), 2);
}

#[test]
fn bad_jacobi_fails_with_report() {
    let out = tempfile::tempdir().unwrap();
    let root = out.path().to_str().unwrap();
    assert_eq!(
        carnot(&[
            "algebra-validate",
            "--config",
            &cfg("bad-jacobi.json"),
            "--out",
            root
        ]),
        1
    );
    let report = read_json(&run_dir(out.path()).join("report.json"));
    assert_eq!(report["passed"], false);
    let failures = report["failures"].as_array().unwrap();
    assert!(failures
        .iter()
        .any(|f| f.as_str().unwrap().starts_with("jacobi")));
}

#[test]
fn degenerate_condenser_fails_solve() {
    let out = tempfile::tempdir().unwrap();
    let root = out.path().to_str().unwrap();
    assert_eq!(
        carnot(&["solve", "--config", &cfg("degenerate.json"), "--out", root]),
        1
    );
    let err = read_json(&run_dir(out.path()).join("error.json"));
    assert!(err["error"]
        .as_str()
        .unwrap()
        .contains("degenerate condenser"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    let out = tempfile::tempdir().unwrap();
    let root = out.path().to_str().unwrap();
    assert_eq!(carnot(&["theorem"]), 2);
    assert_eq!(
        carnot(&["frobnicate", "--config", &cfg("heis-hlap.json")]),
        2
    );
    assert_eq!(
        carnot(&["solve", "--config", "/nonexistent.json", "--out", root]),
        2
    );
    assert_eq!(
        carnot(&[
            "solve",
            "--config",
            &cfg("heis-hlap.json"),
            "--out",
            root,
            "bogus=1"
        ]),
        2
    );
    assert_eq!(
        carnot(&[
            "solve",
            "--config",
            &cfg("heis-hlap.json"),
            "--out",
            root,
            "levels=[1.5]"
        ]),
        2
    );
    assert_eq!(
        carnot(&[
            "props",
            "--config",
            &cfg("heis-hlap.json"),
            "--out",
            root,
            "algebra=\"nilpotent\""
        ]),
        2
    );
    let bad = out.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        carnot(&["solve", "--config", bad.to_str().unwrap(), "--out", root]),
        2
    );
}

#[test]
fn star_check_and_envelope_pass_on_balls() {
    let out = tempfile::tempdir().unwrap();
    let root = out.path().to_str().unwrap();
    let heis = cfg("heis-hlap.json");
    assert_eq!(
        carnot(&[
            "star-check",
            "--config",
            &heis,
            "--out",
            root,
            "star_check.samples=500"
        ]),
        0
    );
    assert_eq!(
        carnot(&[
            "envelope",
            "--config",
            &heis,
            "--out",
            root,
            "grid.counts=[25]"
        ]),
        0
    );
    assert_eq!(
        carnot(&[
            "props",
            "--config",
            &heis,
            "--out",
            root,
            "props_samples=20"
        ]),
        0
    );
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_carnot");
    let out = tempfile::tempdir().unwrap();
    let status = Command::new(bin).arg("solve").status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Command::new(bin)
        .args([
            "algebra-validate",
            "--config",
            &cfg("heis-hlap.json"),
            "--out",
        ])
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = Command::new(bin)
        .args([
            "algebra-validate",
            "--config",
            &cfg("bad-jacobi.json"),
            "--out",
        ])
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
