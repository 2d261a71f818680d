use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use carnot_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(carnot_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn take_string(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { carnot_string_free(s) };
    out
}

#[test]
fn algebra_handle_round_trip() {
    let name = CString::new("engel").unwrap();
    let mut alg = ptr::null_mut();
    unsafe {
        assert_eq!(
            carnot_algebra_new_preset(name.as_ptr(), &mut alg),
            CarnotStatus::Ok
        );
        assert_eq!(carnot_algebra_dim(alg), 4);
        assert_eq!(carnot_algebra_homogeneous_dimension(alg), 7);
        let p = [0.3, -0.2, 0.1, 0.4];
        let mut out = [0.0; 4];
        assert_eq!(
            carnot_dilate(alg, 2.0, p.as_ptr(), out.as_mut_ptr(), 4),
            CarnotStatus::Ok
        );
        assert_eq!(out, [0.6, -0.4, 0.4, 3.2]);
        assert_eq!(
            carnot_dilate(alg, 2.0, p.as_ptr(), out.as_mut_ptr(), 3),
            CarnotStatus::DimensionMismatch
        );
        carnot_algebra_free(alg);
        assert_eq!(carnot_algebra_dim(ptr::null()), 0);
    }
}

#[test]
fn null_and_bad_input() {
    let mut alg = ptr::null_mut();
    unsafe {
        assert_eq!(
            carnot_algebra_new_preset(ptr::null(), &mut alg),
            CarnotStatus::NullPointer
        );
        assert!(last_error().contains("null"));
        let bad = CString::new("{\"step\": 1").unwrap();
        assert_eq!(
            carnot_algebra_new_json(bad.as_ptr(), &mut alg),
            CarnotStatus::InvalidConfig
        );
        assert!(alg.is_null());
        let origin = [0.0; 3];
        let name = CString::new("heisenberg-1").unwrap();
        assert_eq!(
            carnot_algebra_new_preset(name.as_ptr(), &mut alg),
            CarnotStatus::Ok
        );
        let mut v = 0.0;
        assert_eq!(
            carnot_fundamental_solution(alg, origin.as_ptr(), 3, &mut v),
            CarnotStatus::SingularEvaluation
        );
        carnot_algebra_free(alg);
    }
}

#[test]
fn validation_report_lists_jacobi_failure() {
    let spec = r#"{"step": 3, "layer_dims": [3, 3, 1], "brackets": [
        {"a": 0, "b": 1, "out": [{"c": 3, "coef": 1.0}]},
        {"a": 1, "b": 2, "out": [{"c": 4, "coef": 1.0}]},
        {"a": 2, "b": 0, "out": [{"c": 5, "coef": 1.0}]},
        {"a": 0, "b": 4, "out": [{"c": 6, "coef": 1.0}]},
        {"a": 1, "b": 5, "out": [{"c": 6, "coef": 1.0}]},
        {"a": 2, "b": 3, "out": [{"c": 6, "coef": 1.0}]}]}"#;
    let json = CString::new(spec).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { carnot_algebra_validate_json(json.as_ptr(), &mut out) };
    assert_eq!(status, CarnotStatus::CheckFailed);
    assert!(last_error().contains("Jacobi"));
    let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(report["passed"], false);
    let mut alg = ptr::null_mut();
    assert_eq!(
        unsafe { carnot_algebra_new_json(json.as_ptr(), &mut alg) },
        CarnotStatus::InvalidConfig
    );
}

#[test]
fn solve_and_read_field() {
    let cfg = CString::new(r#"{"algebra": "heisenberg-1", "grid": {"counts": [21]}}"#).unwrap();
    let mut field = ptr::null_mut();
    unsafe {
        assert_eq!(
            carnot_solve(cfg.as_ptr(), &mut field),
            CarnotStatus::Ok,
            "{}",
            last_error()
        );
        let n = carnot_field_len(field);
        assert_eq!(n, 21 * 21 * 21);
        let mut values = vec![0.0; n];
        assert_eq!(
            carnot_field_values(field, values.as_mut_ptr(), n),
            CarnotStatus::Ok
        );
        assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        let origin = [0.0; 3];
        let mut v = 0.0;
        assert_eq!(
            carnot_field_interpolate(field, origin.as_ptr(), 3, &mut v),
            CarnotStatus::Ok
        );
        assert_eq!(v, 1.0);
        let mut stats = ptr::null_mut();
        assert_eq!(carnot_field_stats_json(field, &mut stats), CarnotStatus::Ok);
        let stats: serde_json::Value = serde_json::from_str(&take_string(stats)).unwrap();
        assert!(stats["stats"]["residual"].as_f64().unwrap() < 1e-6);
        carnot_field_free(field);
    }
}

#[test]
fn degenerate_condenser_status() {
    let cfg = CString::new(
        r#"{"algebra": "heisenberg-1", "condenser": {
            "outer": {"shape": "gauge-ball", "radius": 1.0},
            "inner": {"shape": "gauge-ball", "radius": 2.0}}}"#,
    )
    .unwrap();
    let mut field = ptr::null_mut();
    let status = unsafe { carnot_solve(cfg.as_ptr(), &mut field) };
    assert_ne!(status, CarnotStatus::Ok);
    assert!(field.is_null());
}

#[test]
fn theorem_report_through_ffi() {
    let cfg = CString::new(r#"{"algebra": "heisenberg-1", "grid": {"counts": [25]}}"#).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { carnot_theorem_report_json(cfg.as_ptr(), &mut out) };
    let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(status, CarnotStatus::Ok, "{}", last_error());
    assert_eq!(report["passed"], true);
}

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header_and_staticlib() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libcarnot_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests").join("smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
