//! C interface to `stagesurv`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`SsStatus`]; on failure [`ss_last_error`] describes what went wrong on
//! the calling thread. Strings returned through out-parameters are owned by
//! the caller and released with [`ss_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stagesurv::cox::{
    fit_cox, log_partial_likelihood, percent_hazard_change, CoxFit, FitControls, TieMethod,
};
use stagesurv::design::{ColumnMeta, DesignMatrix};
use stagesurv::diagnostics::{
    grambsch_therneau_test, scale_residuals, schoenfeld_residuals, GTransform,
};
use stagesurv::error::Error;
use stagesurv::km::kaplan_meier;
use stagesurv::panel::{build_design, load_panel, CovariateRecipe};
use stagesurv::records::{IntervalRecord, RiskSetIndex};
use stagesurv::render;
use stagesurv::synth::{generate, Scenario};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Schema = 4,
    RejectedRows = 5,
    Separation = 6,
    Collinear = 7,
    NoConvergence = 8,
    Degenerate = 9,
    Overflow = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsTies {
    Breslow = 0,
    Efron = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsGTransform {
    Identity = 0,
    Log = 1,
    Km = 2,
}

impl From<SsTies> for TieMethod {
    fn from(t: SsTies) -> Self {
        match t {
            SsTies::Breslow => TieMethod::Breslow,
            SsTies::Efron => TieMethod::Efron,
        }
    }
}

impl From<SsGTransform> for GTransform {
    fn from(g: SsGTransform) -> Self {
        match g {
            SsGTransform::Identity => GTransform::Identity,
            SsGTransform::Log => GTransform::Log,
            SsGTransform::Km => GTransform::Km,
        }
    }
}

/// Validated panel records.
pub struct SsPanel {
    records: Vec<IntervalRecord>,
}

/// Covariate matrix with outcome.
pub struct SsDesign {
    design: DesignMatrix,
}

/// Converged Cox fit.
pub struct SsFit {
    fit: CoxFit,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> SsStatus {
    match e {
        Error::EmptyInput(_)
        | Error::InvalidArgument(_)
        | Error::Malformed(_)
        | Error::ConstantColumn(_) => SsStatus::InvalidArgument,
        Error::NotConverged | Error::AlreadyScaled | Error::NotScaled => SsStatus::InvalidArgument,
        Error::Schema(_) => SsStatus::Schema,
        Error::Io { .. } => SsStatus::Io,
        Error::Overflow { .. } => SsStatus::Overflow,
        Error::Collinear => SsStatus::Collinear,
        Error::Separation { .. } => SsStatus::Separation,
        Error::NoConvergence { .. } => SsStatus::NoConvergence,
        Error::Degenerate(_) => SsStatus::Degenerate,
    }
}

struct Failure(SsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording its error message and turning panics into
/// [`SsStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            SsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("no interior nul")
        .into_raw()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `(exp(beta) - 1) * 100`.
#[no_mangle]
pub extern "C" fn ss_percent_hazard_change(beta: f64) -> f64 {
    percent_hazard_change(beta)
}

/// Loads and validates a panel file. Files with rejected rows fail with
/// [`SsStatus::RejectedRows`] and a message listing them.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_panel_load(path: *const c_char, out: *mut *mut SsPanel) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let loaded = load_panel(path)?;
        if !loaded.rejections.is_empty() {
            return Err(Failure(
                SsStatus::RejectedRows,
                loaded.rejections.to_string(),
            ));
        }
        *out = Box::into_raw(Box::new(SsPanel {
            records: loaded.records,
        }));
        Ok(())
    })
}

/// Number of records in `panel` (0 for null).
///
/// # Safety
/// `panel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_panel_len(panel: *const SsPanel) -> usize {
    panel.as_ref().map_or(0, |p| p.records.len())
}

/// # Safety
/// `panel` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_panel_free(panel: *mut SsPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// Generates a synthetic panel. `scenario_json` may be null for the default
/// scenario; `truth_json` (may be null) receives the ground-truth document.
///
/// # Safety
/// Pointers must be null or valid as described.
#[no_mangle]
pub unsafe extern "C" fn ss_simulate(
    scenario_json: *const c_char,
    out: *mut *mut SsPanel,
    truth_json: *mut *mut c_char,
) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let scenario = match opt_str_arg(scenario_json, "scenario_json")? {
            Some(s) => Scenario::from_json(s)?,
            None => Scenario::default(),
        };
        let (records, truth) = generate(&scenario)?;
        if !truth_json.is_null() {
            *truth_json = c_string(serde_json::to_string(&truth).expect("truth serializes"));
        }
        *out = Box::into_raw(Box::new(SsPanel { records }));
        Ok(())
    })
}

/// Builds the design of `panel` from a JSON recipe, or the default
/// nine-column recipe when `recipe_json` is null.
///
/// # Safety
/// `panel` must be a live handle, `recipe_json` null or nul-terminated,
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_design_build(
    panel: *const SsPanel,
    recipe_json: *const c_char,
    out: *mut *mut SsDesign,
) -> SsStatus {
    guard(|| {
        let panel = panel.as_ref().ok_or_else(|| null("panel"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let recipe = match opt_str_arg(recipe_json, "recipe_json")? {
            Some(s) => CovariateRecipe::from_json(s)?,
            None => CovariateRecipe::default(),
        };
        let design = build_design(&panel.records, &recipe)?;
        *out = Box::into_raw(Box::new(SsDesign { design }));
        Ok(())
    })
}

/// Design from raw arrays: `x` is `n_rows * n_cols` row-major, `events`
/// holds 0/1. Columns are named `x0`, `x1`, ...
///
/// # Safety
/// Arrays must hold the stated number of elements; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_design_from_arrays(
    n_rows: usize,
    n_cols: usize,
    x: *const f64,
    durations: *const f64,
    events: *const u8,
    out: *mut *mut SsDesign,
) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n_rows.checked_mul(n_cols).ok_or_else(|| {
            Failure(
                SsStatus::InvalidArgument,
                "n_rows * n_cols overflows".into(),
            )
        })?;
        let x = slice_arg(x, len, "x")?;
        let t = slice_arg(durations, n_rows, "durations")?;
        let e = slice_arg(events, n_rows, "events")?;
        if let Some(bad) = e.iter().find(|&&v| v > 1) {
            return Err(Failure(
                SsStatus::InvalidArgument,
                format!("event flag {bad} is not 0 or 1"),
            ));
        }
        let rows = (0..n_rows)
            .map(|i| x[i * n_cols..(i + 1) * n_cols].to_vec())
            .collect();
        let design = DesignMatrix::new(
            (0..n_cols)
                .map(|j| ColumnMeta::continuous(format!("x{j}")))
                .collect(),
            rows,
            t.to_vec(),
            e.iter().map(|&v| v == 1).collect(),
        )?;
        *out = Box::into_raw(Box::new(SsDesign { design }));
        Ok(())
    })
}

/// # Safety
/// `design` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_design_num_rows(design: *const SsDesign) -> usize {
    design.as_ref().map_or(0, |d| d.design.n_rows())
}

/// # Safety
/// `design` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_design_num_cols(design: *const SsDesign) -> usize {
    design.as_ref().map_or(0, |d| d.design.n_cols())
}

/// # Safety
/// `design` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_design_free(design: *mut SsDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// Log partial likelihood at `beta` (`n_beta` must equal the column count).
///
/// # Safety
/// `design` live, `beta` holds `n_beta` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_log_partial_likelihood(
    design: *const SsDesign,
    beta: *const f64,
    n_beta: usize,
    ties: SsTies,
    out: *mut f64,
) -> SsStatus {
    guard(|| {
        let d = design.as_ref().ok_or_else(|| null("design"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let beta = slice_arg(beta, n_beta, "beta")?;
        *out = log_partial_likelihood(&d.design, beta, ties.into())?;
        Ok(())
    })
}

/// Fits a Cox model with default Newton-Raphson settings.
///
/// # Safety
/// `design` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_fit_cox(
    design: *const SsDesign,
    ties: SsTies,
    out: *mut *mut SsFit,
) -> SsStatus {
    guard(|| {
        let d = design.as_ref().ok_or_else(|| null("design"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let fit = fit_cox(&d.design, ties.into(), &FitControls::default())?;
        *out = Box::into_raw(Box::new(SsFit { fit }));
        Ok(())
    })
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_fit_num_covariates(fit: *const SsFit) -> usize {
    fit.as_ref().map_or(0, |f| f.fit.beta.len())
}

/// Copies coefficients and standard errors into caller buffers of length
/// `len` (either buffer may be null). Fails with
/// [`SsStatus::BufferTooSmall`] when `len` is less than the covariate count.
///
/// # Safety
/// `fit` live; non-null buffers hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_fit_coefficients(
    fit: *const SsFit,
    beta_out: *mut f64,
    se_out: *mut f64,
    len: usize,
) -> SsStatus {
    guard(|| {
        let f = &fit.as_ref().ok_or_else(|| null("fit"))?.fit;
        let k = f.beta.len();
        if len < k {
            return Err(Failure(
                SsStatus::BufferTooSmall,
                format!("buffers hold {len} values, the fit has {k}"),
            ));
        }
        if !beta_out.is_null() {
            ptr::copy_nonoverlapping(f.beta.as_ptr(), beta_out, k);
        }
        if !se_out.is_null() {
            ptr::copy_nonoverlapping(f.se.as_ptr(), se_out, k);
        }
        Ok(())
    })
}

/// Null-model and fitted log partial likelihoods (either pointer may be
/// null).
///
/// # Safety
/// `fit` live; non-null outputs writable.
#[no_mangle]
pub unsafe extern "C" fn ss_fit_loglik(
    fit: *const SsFit,
    null_out: *mut f64,
    fitted_out: *mut f64,
) -> SsStatus {
    guard(|| {
        let f = &fit.as_ref().ok_or_else(|| null("fit"))?.fit;
        if let Some(o) = null_out.as_mut() {
            *o = f.loglik_null;
        }
        if let Some(o) = fitted_out.as_mut() {
            *o = f.loglik_fit;
        }
        Ok(())
    })
}

/// Full fit report as a JSON document.
///
/// # Safety
/// `fit` live, `out` writable; free the result with [`ss_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ss_fit_to_json(fit: *const SsFit, out: *mut *mut c_char) -> SsStatus {
    guard(|| {
        let f = &fit.as_ref().ok_or_else(|| null("fit"))?.fit;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = c_string(render::fit_json("Cox model", f, &[]).to_string());
        Ok(())
    })
}

/// Grambsch-Therneau proportionality test as a JSON document, flags at
/// `alpha`.
///
/// # Safety
/// `design` and `fit` live and matching; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_ph_test_json(
    design: *const SsDesign,
    fit: *const SsFit,
    g: SsGTransform,
    alpha: f64,
    out: *mut *mut c_char,
) -> SsStatus {
    guard(|| {
        let d = &design.as_ref().ok_or_else(|| null("design"))?.design;
        let f = &fit.as_ref().ok_or_else(|| null("fit"))?.fit;
        if out.is_null() {
            return Err(null("out"));
        }
        let resid = scale_residuals(&schoenfeld_residuals(d, f)?, f)?;
        let report = grambsch_therneau_test(&resid, f, g.into())?;
        *out = c_string(render::ph_report_json(&report, alpha).to_string());
        Ok(())
    })
}

/// # Safety
/// `fit` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_fit_free(fit: *mut SsFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Kaplan-Meier curve of `n` observations. Writes the number of distinct
/// event times to `out_len`; when `capacity` is large enough the event
/// times and survival values are copied out, otherwise the call fails with
/// [`SsStatus::BufferTooSmall`] (call again with a larger buffer).
///
/// # Safety
/// Inputs hold `n` values; non-null outputs hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_kaplan_meier(
    n: usize,
    durations: *const f64,
    events: *const u8,
    times_out: *mut f64,
    survival_out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> SsStatus {
    guard(|| {
        let out_len = out_len.as_mut().ok_or_else(|| null("out_len"))?;
        let t = slice_arg(durations, n, "durations")?;
        let e = slice_arg(events, n, "events")?;
        let ev: Vec<bool> = e.iter().map(|&v| v != 0).collect();
        let curve = kaplan_meier(&RiskSetIndex::from_times(t, &ev)?);
        *out_len = curve.steps.len();
        if capacity < curve.steps.len() {
            return Err(Failure(
                SsStatus::BufferTooSmall,
                format!("{} steps do not fit in {capacity}", curve.steps.len()),
            ));
        }
        for (i, s) in curve.steps.iter().enumerate() {
            if !times_out.is_null() {
                *times_out.add(i) = s.time;
            }
            if !survival_out.is_null() {
                *survival_out.add(i) = s.survival;
            }
        }
        Ok(())
    })
}
