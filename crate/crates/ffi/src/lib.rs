//! C ABI for the countgof library.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_from_*`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`CountgofStatus`]; on failure a description is available from
//! [`countgof_last_error_message`] on the same thread. Panics are caught and
//! reported as [`CountgofStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use countgof::bootstrap::{bootstrap_test, TestConfig};
use countgof::estimate::fit;
use countgof::models::{simulate, CountSeries, ModelSpec};
use countgof::pgf::{NullFamily, NullParams};
use countgof::statistic::{statistic, Route, WeightSpec};
use countgof::Error;

/// Maximum number of parameters of any null family.
pub const COUNTGOF_MAX_PARAMS: usize = 3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountgofStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Degenerate = 3,
    NonConvergence = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountgofFamily {
    PoissonInar1 = 0,
    PoissonInarch1 = 1,
    PoissonInar2 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountgofRoute {
    Auto = 0,
    Closed = 1,
    Quadrature = 2,
}

/// Opaque count series.
pub struct CountgofSeries(CountSeries);

/// Opaque model specification.
pub struct CountgofModel(ModelSpec);

/// Null-model parameters in the order p, theta (INAR(1)); theta1, theta2
/// (INARCH(1)); p1, p2, theta (INAR(2)). Unused trailing entries are zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CountgofParams {
    pub values: [f64; COUNTGOF_MAX_PARAMS],
    pub len: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CountgofTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub params: CountgofParams,
    /// Nonzero when the fit on the data was clamped onto the admissible region.
    pub fit_clamped: i32,
    pub clamped_replicates: usize,
    pub redraws: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CountgofStatus {
    match e {
        Error::DegenerateSeries(_)
        | Error::TooManyRedraws { .. }
        | Error::TooManyFailures { .. } => CountgofStatus::Degenerate,
        Error::NonConvergence { .. } => CountgofStatus::NonConvergence,
        Error::Io(_) => CountgofStatus::Io,
        Error::Parse { .. } | Error::Csv(_) => CountgofStatus::Parse,
        _ => CountgofStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CountgofStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CountgofStatus::Ok,
        Ok(Err(Fail::Null(name))) => {
            set_last_error(format!("null pointer passed as `{name}`"));
            CountgofStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CountgofStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn string<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::Config(format!("`{name}` is not valid UTF-8"))))
}

fn family(f: CountgofFamily) -> NullFamily {
    match f {
        CountgofFamily::PoissonInar1 => NullFamily::PoissonInar1,
        CountgofFamily::PoissonInarch1 => NullFamily::PoissonInarch1,
        CountgofFamily::PoissonInar2 => NullFamily::PoissonInar2,
    }
}

fn route(r: CountgofRoute) -> Route {
    match r {
        CountgofRoute::Auto => Route::Auto,
        CountgofRoute::Closed => Route::Closed,
        CountgofRoute::Quadrature => Route::Quadrature,
    }
}

fn to_params(p: &NullParams) -> CountgofParams {
    let v = p.as_vec();
    let mut values = [0.0; COUNTGOF_MAX_PARAMS];
    values[..v.len()].copy_from_slice(&v);
    CountgofParams {
        values,
        len: v.len(),
    }
}

fn from_params(f: NullFamily, p: &CountgofParams) -> Result<NullParams, Fail> {
    let v = &p.values;
    let (needed, params) = match f {
        NullFamily::PoissonInar1 => (
            2,
            NullParams::PoissonInar1 {
                p: v[0],
                theta: v[1],
            },
        ),
        NullFamily::PoissonInarch1 => (
            2,
            NullParams::PoissonInarch1 {
                theta1: v[0],
                theta2: v[1],
            },
        ),
        NullFamily::PoissonInar2 => (
            3,
            NullParams::PoissonInar2 {
                p1: v[0],
                p2: v[1],
                theta: v[2],
            },
        ),
    };
    if p.len != needed {
        return Err(Fail::Lib(Error::Config(format!(
            "{f} takes {needed} parameters, got {}",
            p.len
        ))));
    }
    Ok(params)
}

/// Message describing the last failed call on this thread, or NULL. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn countgof_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `len` counts into a new series.
///
/// # Safety
/// `values` must point to `len` readable `uint32_t`; `series_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn countgof_series_new(
    values: *const u32,
    len: usize,
    series_out: *mut *mut CountgofSeries,
) -> CountgofStatus {
    guard(|| {
        let slot = out(series_out, "series_out")?;
        if values.is_null() && len > 0 {
            return Err(Fail::Null("values"));
        }
        let data = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(values, len).to_vec()
        };
        *slot = Box::into_raw(Box::new(CountgofSeries(CountSeries::new(data)?)));
        Ok(())
    })
}

/// Reads a single-column CSV of counts.
///
/// # Safety
/// `path` must be a NUL-terminated string; `series_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn countgof_series_read_csv(
    path: *const c_char,
    series_out: *mut *mut CountgofSeries,
) -> CountgofStatus {
    guard(|| {
        let slot = out(series_out, "series_out")?;
        let series = CountSeries::read_csv_path(string(path, "path")?)?;
        *slot = Box::into_raw(Box::new(CountgofSeries(series)));
        Ok(())
    })
}

/// Number of observations, 0 for NULL.
///
/// # Safety
/// `series` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn countgof_series_len(series: *const CountgofSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Copies up to `capacity` counts into `buffer`.
///
/// # Safety
/// `series` must be a live handle and `buffer` writable for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn countgof_series_copy(
    series: *const CountgofSeries,
    buffer: *mut u32,
    capacity: usize,
) -> CountgofStatus {
    guard(|| {
        let s = deref(series, "series")?;
        if buffer.is_null() {
            return Err(Fail::Null("buffer"));
        }
        let n = capacity.min(s.0.len());
        ptr::copy_nonoverlapping(s.0.values().as_ptr(), buffer, n);
        Ok(())
    })
}

/// # Safety
/// `series` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn countgof_series_free(series: *mut CountgofSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Parses a TOML model specification.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `model_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn countgof_model_from_toml(
    toml: *const c_char,
    model_out: *mut *mut CountgofModel,
) -> CountgofStatus {
    guard(|| {
        let slot = out(model_out, "model_out")?;
        let model = ModelSpec::from_toml_str(string(toml, "toml")?)?;
        *slot = Box::into_raw(Box::new(CountgofModel(model)));
        Ok(())
    })
}

/// Poisson null model with the given parameters.
///
/// # Safety
/// `params` must be readable and `model_out` writable.
#[no_mangle]
pub unsafe extern "C" fn countgof_model_null(
    family_id: CountgofFamily,
    params: *const CountgofParams,
    model_out: *mut *mut CountgofModel,
) -> CountgofStatus {
    guard(|| {
        let slot = out(model_out, "model_out")?;
        let p = from_params(family(family_id), deref(params, "params")?)?;
        let model = p.to_model();
        model.validate()?;
        *slot = Box::into_raw(Box::new(CountgofModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn countgof_model_free(model: *mut CountgofModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Simulates `t` observations after `burn_in` discarded steps.
///
/// # Safety
/// `model` must be a live handle and `series_out` writable.
#[no_mangle]
pub unsafe extern "C" fn countgof_simulate(
    model: *const CountgofModel,
    t: usize,
    burn_in: usize,
    seed: u64,
    series_out: *mut *mut CountgofSeries,
) -> CountgofStatus {
    guard(|| {
        let slot = out(series_out, "series_out")?;
        let m = deref(model, "model")?;
        if t == 0 {
            return Err(Fail::Lib(Error::Config(
                "series length must be >= 1".into(),
            )));
        }
        let series = simulate(&m.0, t, burn_in, seed)?;
        *slot = Box::into_raw(Box::new(CountgofSeries(series)));
        Ok(())
    })
}

/// Conditional least-squares fit; writes the admissible estimates.
///
/// # Safety
/// `series` must be a live handle and `params_out` writable.
#[no_mangle]
pub unsafe extern "C" fn countgof_fit(
    series: *const CountgofSeries,
    family_id: CountgofFamily,
    params_out: *mut CountgofParams,
) -> CountgofStatus {
    guard(|| {
        let slot = out(params_out, "params_out")?;
        let result = fit(&deref(series, "series")?.0, family(family_id))?;
        *slot = to_params(&result.params);
        Ok(())
    })
}

/// Test statistic for `series` at the given null parameters.
///
/// # Safety
/// `series` and `params` must be readable and `value_out` writable.
#[no_mangle]
pub unsafe extern "C" fn countgof_statistic(
    series: *const CountgofSeries,
    family_id: CountgofFamily,
    params: *const CountgofParams,
    a: f64,
    route_id: CountgofRoute,
    value_out: *mut f64,
) -> CountgofStatus {
    guard(|| {
        let slot = out(value_out, "value_out")?;
        let s = deref(series, "series")?;
        let p = from_params(family(family_id), deref(params, "params")?)?;
        *slot = statistic(&s.0, &p, WeightSpec::new(a)?, route(route_id))?.value;
        Ok(())
    })
}

/// Bootstrap goodness-of-fit test with `replicates` bootstrap samples.
///
/// # Safety
/// `series` must be a live handle and `result_out` writable.
#[no_mangle]
pub unsafe extern "C" fn countgof_gof_test(
    series: *const CountgofSeries,
    family_id: CountgofFamily,
    a: f64,
    replicates: usize,
    seed: u64,
    route_id: CountgofRoute,
    result_out: *mut CountgofTestResult,
) -> CountgofStatus {
    guard(|| {
        let slot = out(result_out, "result_out")?;
        let s = deref(series, "series")?;
        let mut config = TestConfig::new(family(family_id), a, replicates, seed)?;
        config.route = route(route_id);
        config.validate()?;
        let r = bootstrap_test(&s.0, &config)?;
        *slot = CountgofTestResult {
            statistic: r.statistic,
            p_value: r.p_value,
            params: to_params(&r.params),
            fit_clamped: r.fit.was_clamped() as i32,
            clamped_replicates: r.diagnostics.clamped_replicates,
            redraws: r.diagnostics.redraws,
        };
        Ok(())
    })
}
