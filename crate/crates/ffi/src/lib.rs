//! C ABI over `carnot`.
//!
//! Objects are opaque handles created by `carnot_*_new`/`carnot_solve` and
//! released with the matching `_free`. Every fallible call returns a
//! `CarnotStatus`; on failure `carnot_last_error` describes it. Strings
//! handed out by the library are freed with `carnot_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use carnot::algebra::{validate_spec, Algebra, AlgebraSpec, GroupPoint};
use carnot::config::parse_config;
use carnot::harness::{fundamental_solution, run_theorem_experiment};
use carnot::solver::{self, Solution};
use carnot::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CarnotStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    DimensionMismatch = 4,
    NonPositiveScale = 5,
    SingularEvaluation = 6,
    Precondition = 7,
    DegenerateCondenser = 8,
    NonConvergence = 9,
    Io = 10,
    /// The call completed but a check it ran did not pass.
    CheckFailed = 11,
    Panic = 99,
}

/// Opaque Carnot group.
pub struct CarnotAlgebra(Arc<Algebra>);

/// Opaque solved potential.
pub struct CarnotField(Solution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let s = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn status_of(e: &Error) -> CarnotStatus {
    match e {
        Error::DimensionMismatch { .. } => CarnotStatus::DimensionMismatch,
        Error::NonPositiveScale(_) => CarnotStatus::NonPositiveScale,
        Error::InvalidSpec(_) | Error::UnknownPreset(_) | Error::Config(_) | Error::Json(_) => {
            CarnotStatus::InvalidConfig
        }
        Error::SingularEvaluation(_) => CarnotStatus::SingularEvaluation,
        Error::Precondition(_) | Error::NotStarshaped { .. } => CarnotStatus::Precondition,
        Error::DegenerateCondenser(_) | Error::UnboundedCondenser { .. } => {
            CarnotStatus::DegenerateCondenser
        }
        Error::NonConvergence { .. } => CarnotStatus::NonConvergence,
        Error::Io(_) => CarnotStatus::Io,
    }
}

struct Fail(CarnotStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CarnotStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any error and converts panics to `Panic`.
fn guard<F: FnOnce() -> Result<CarnotStatus, Fail>>(f: F) -> CarnotStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => {
            if s == CarnotStatus::Ok {
                set_error("");
            }
            s
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside carnot");
            CarnotStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CarnotStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null("output buffer"));
    }
    if len < need {
        return Err(Error::DimensionMismatch {
            expected: need,
            got: len,
        }
        .into());
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn algebra_ref<'a>(alg: *const CarnotAlgebra) -> Result<&'a Algebra, Fail> {
    alg.as_ref()
        .map(|a| a.0.as_ref())
        .ok_or_else(|| null("algebra"))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output string"));
    }
    *out = CString::new(s).expect("JSON has no nuls").into_raw();
    Ok(())
}

/// Static version string; do not free.
#[no_mangle]
pub extern "C" fn carnot_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn carnot_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn carnot_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds an algebra from a preset name (`heisenberg-<n>`, `engel`,
/// `abelian-<n>`).
///
/// # Safety
/// `name` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_algebra_new_preset(
    name: *const c_char,
    out: *mut *mut CarnotAlgebra,
) -> CarnotStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let alg = Algebra::preset(name)?;
        *out = Box::into_raw(Box::new(CarnotAlgebra(Arc::new(alg))));
        Ok(CarnotStatus::Ok)
    })
}

/// Builds and fully validates an algebra from its JSON spec.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_algebra_new_json(
    json: *const c_char,
    out: *mut *mut CarnotAlgebra,
) -> CarnotStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec: AlgebraSpec = serde_json::from_str(json).map_err(Error::from)?;
        let alg = Algebra::validated(spec)?;
        *out = Box::into_raw(Box::new(CarnotAlgebra(Arc::new(alg))));
        Ok(CarnotStatus::Ok)
    })
}

/// # Safety
/// `alg` must come from `carnot_algebra_new_*` or be null.
#[no_mangle]
pub unsafe extern "C" fn carnot_algebra_free(alg: *mut CarnotAlgebra) {
    if !alg.is_null() {
        drop(Box::from_raw(alg));
    }
}

/// Topological dimension, or 0 for a null handle.
///
/// # Safety
/// `alg` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn carnot_algebra_dim(alg: *const CarnotAlgebra) -> usize {
    alg.as_ref().map_or(0, |a| a.0.dim())
}

/// Homogeneous dimension, or 0 for a null handle.
///
/// # Safety
/// `alg` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn carnot_algebra_homogeneous_dimension(alg: *const CarnotAlgebra) -> usize {
    alg.as_ref().map_or(0, |a| a.0.homogeneous_dimension())
}

/// Validation report for a JSON algebra spec, as JSON in `*out`. Returns
/// `CheckFailed` (with the report still written) when a check fails.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_algebra_validate_json(
    json: *const c_char,
    out: *mut *mut c_char,
) -> CarnotStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let spec: AlgebraSpec = serde_json::from_str(json).map_err(Error::from)?;
        let report = validate_spec(&spec);
        put_string(out, serde_json::to_string(&report).map_err(Error::from)?)?;
        if report.passed {
            Ok(CarnotStatus::Ok)
        } else {
            Err(Fail(
                CarnotStatus::CheckFailed,
                report.failures().join("; "),
            ))
        }
    })
}

/// `out = p · q` in exponential coordinates. All buffers hold `dim` values.
///
/// # Safety
/// `p`, `q` must point to `dim` readable and `out` to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn carnot_group_mul(
    alg: *const CarnotAlgebra,
    p: *const f64,
    q: *const f64,
    out: *mut f64,
    len: usize,
) -> CarnotStatus {
    guard(|| {
        let alg = algebra_ref(alg)?;
        let n = alg.dim();
        let p = GroupPoint::new(slice_arg(p, n, "p")?);
        let q = GroupPoint::new(slice_arg(q, n, "q")?);
        let r = alg.group_mul(&p, &q)?;
        out_slice(out, len, n)?.copy_from_slice(r.coords());
        Ok(CarnotStatus::Ok)
    })
}

/// `out = δ_λ(p)`.
///
/// # Safety
/// `p` must point to `dim` readable and `out` to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn carnot_dilate(
    alg: *const CarnotAlgebra,
    lambda: f64,
    p: *const f64,
    out: *mut f64,
    len: usize,
) -> CarnotStatus {
    guard(|| {
        let alg = algebra_ref(alg)?;
        let n = alg.dim();
        let r = alg.dilate(lambda, &GroupPoint::new(slice_arg(p, n, "p")?))?;
        out_slice(out, len, n)?.copy_from_slice(r.coords());
        Ok(CarnotStatus::Ok)
    })
}

/// Homogeneous gauge of `p` (length `len`, must equal `dim`).
///
/// # Safety
/// `p` must point to `len` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_gauge(
    alg: *const CarnotAlgebra,
    p: *const f64,
    len: usize,
    out: *mut f64,
) -> CarnotStatus {
    guard(|| {
        let alg = algebra_ref(alg)?;
        if len != alg.dim() {
            return Err(Error::DimensionMismatch {
                expected: alg.dim(),
                got: len,
            }
            .into());
        }
        let g = alg.gauge_of(slice_arg(p, len, "p")?);
        *out_slice(out, 1, 1)?.first_mut().expect("one slot") = g;
        Ok(CarnotStatus::Ok)
    })
}

/// `|p|^{2-Q}`.
///
/// # Safety
/// `p` must point to `len` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_fundamental_solution(
    alg: *const CarnotAlgebra,
    p: *const f64,
    len: usize,
    out: *mut f64,
) -> CarnotStatus {
    guard(|| {
        let alg = algebra_ref(alg)?;
        let v = fundamental_solution(alg, slice_arg(p, len, "p")?)?;
        out_slice(out, 1, 1)?[0] = v;
        Ok(CarnotStatus::Ok)
    })
}

/// Solves the condenser problem described by an experiment config (JSON).
///
/// # Safety
/// `config_json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_solve(
    config_json: *const c_char,
    out: *mut *mut CarnotField,
) -> CarnotStatus {
    guard(|| {
        let cfg = parse_config(str_arg(config_json, "config")?, &[])?;
        if out.is_null() {
            return Err(null("out"));
        }
        let condenser = cfg.build_condenser()?;
        let grid = cfg.grid.build(&condenser)?;
        let solution = solver::solve(&grid, condenser, &cfg.solve)?;
        *out = Box::into_raw(Box::new(CarnotField(solution)));
        Ok(CarnotStatus::Ok)
    })
}

/// # Safety
/// `field` must come from `carnot_solve` or be null.
#[no_mangle]
pub unsafe extern "C" fn carnot_field_free(field: *mut CarnotField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of grid nodes, or 0 for a null handle.
///
/// # Safety
/// `field` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn carnot_field_len(field: *const CarnotField) -> usize {
    field.as_ref().map_or(0, |f| f.0.field.values.len())
}

/// Copies node values (row-major, axis 0 slowest) into `out`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn carnot_field_values(
    field: *const CarnotField,
    out: *mut f64,
    len: usize,
) -> CarnotStatus {
    guard(|| {
        let f = &field.as_ref().ok_or_else(|| null("field"))?.0.field;
        out_slice(out, len, f.values.len())?.copy_from_slice(&f.values);
        Ok(CarnotStatus::Ok)
    })
}

/// Multilinear interpolation of the potential at `p`.
///
/// # Safety
/// `p` must point to `len` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_field_interpolate(
    field: *const CarnotField,
    p: *const f64,
    len: usize,
    out: *mut f64,
) -> CarnotStatus {
    guard(|| {
        let f = &field.as_ref().ok_or_else(|| null("field"))?.0.field;
        let n = f.grid.dim();
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            }
            .into());
        }
        out_slice(out, 1, 1)?[0] = f.interpolate(slice_arg(p, len, "p")?);
        Ok(CarnotStatus::Ok)
    })
}

/// Grid and solver statistics as JSON in `*out`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_field_stats_json(
    field: *const CarnotField,
    out: *mut *mut c_char,
) -> CarnotStatus {
    guard(|| {
        let s = &field.as_ref().ok_or_else(|| null("field"))?.0;
        let v = serde_json::json!({ "grid": s.field.grid, "stats": s.stats });
        put_string(out, v.to_string())?;
        Ok(CarnotStatus::Ok)
    })
}

/// Runs the full starshapedness pipeline and writes the report as JSON to
/// `*out`. Returns `CheckFailed`, with the report written, when it does not pass.
///
/// # Safety
/// `config_json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn carnot_theorem_report_json(
    config_json: *const c_char,
    out: *mut *mut c_char,
) -> CarnotStatus {
    guard(|| {
        let cfg = parse_config(str_arg(config_json, "config")?, &[])?;
        let run = run_theorem_experiment(&cfg)?;
        let report = carnot::io::to_json(&run.report)?;
        put_string(out, report)?;
        if run.report.passed {
            Ok(CarnotStatus::Ok)
        } else {
            Err(Fail(
                CarnotStatus::CheckFailed,
                "theorem report did not pass".into(),
            ))
        }
    })
}
