//! C ABI over the fitting library: opaque handles, integer status codes,
//! and a thread-local last-error message. The generated header lives in
//! `include/growthss.h`.
//!
//! Ownership: every `*_new`/`*_read`/`gss_fit` output is owned by the
//! caller and released with the matching `*_free`. Handles are never
//! mutated after creation, so sharing a handle across threads for reads is
//! safe; create and free on any thread.

#![allow(clippy::missing_safety_doc)] // ownership and nullability rules are in the module docs

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};

use growthss::error::Error;
use growthss::estimate::{fit, FitResult, OptimizerConfig};
use growthss::io::{dataset_fingerprint, read_long_csv, scale_values, FitArtifact};
use growthss::models::GrowthModelSpec;
use growthss::ssm::{Dataset, ObservationSeries};

/// Success.
pub const GSS_OK: c_int = 0;
/// Invalid arguments, unknown names, or malformed input data.
pub const GSS_ERR_USAGE: c_int = 1;
/// Numerical failure (likelihood not evaluable, non-convergence guards).
pub const GSS_ERR_NUMERIC: c_int = 2;
/// File system or parse failure.
pub const GSS_ERR_IO: c_int = 3;
/// A required pointer argument was null.
pub const GSS_ERR_NULL: c_int = 4;
/// A string argument was not valid UTF-8.
pub const GSS_ERR_UTF8: c_int = 5;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|c| *c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn code_of(err: &Error) -> c_int {
    match err.exit_code() {
        2 => GSS_ERR_NUMERIC,
        _ => match err {
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => GSS_ERR_IO,
            _ => GSS_ERR_USAGE,
        },
    }
}

/// Long-format longitudinal dataset handle.
pub struct GssDataset {
    data: Dataset,
    fingerprint: String,
}

/// Fitted-model handle.
pub struct GssFit {
    fit: FitResult,
    group: String,
    scale: f64,
    fingerprint: String,
    n_records: usize,
}

unsafe fn cstr<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, c_int> {
    if ptr.is_null() {
        set_error(&format!("{what} is null"));
        return Err(GSS_ERR_NULL);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_error(&format!("{what} is not valid UTF-8"));
            Err(GSS_ERR_UTF8)
        }
    }
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes, not
/// counting the terminator.
#[no_mangle]
pub unsafe extern "C" fn gss_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len() - 1
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn gss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Read a long-format CSV (columns group,replicate,time,value) into a new
/// dataset handle.
#[no_mangle]
pub unsafe extern "C" fn gss_dataset_read_csv(
    path: *const c_char,
    out: *mut *mut GssDataset,
) -> c_int {
    if out.is_null() {
        set_error("out is null");
        return GSS_ERR_NULL;
    }
    let path = match unsafe { cstr(path, "path") } {
        Ok(s) => s,
        Err(code) => return code,
    };
    match read_long_csv(path) {
        Ok(data) => {
            let fingerprint = dataset_fingerprint(&data);
            unsafe {
                *out = Box::into_raw(Box::new(GssDataset { data, fingerprint }));
            }
            GSS_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            code_of(&e)
        }
    }
}

/// Number of records in the dataset.
#[no_mangle]
pub unsafe extern "C" fn gss_dataset_len(data: *const GssDataset) -> usize {
    if data.is_null() {
        return 0;
    }
    unsafe { &*data }.data.len()
}

#[no_mangle]
pub unsafe extern "C" fn gss_dataset_free(data: *mut GssDataset) {
    if !data.is_null() {
        drop(unsafe { Box::from_raw(data) });
    }
}

/// Fit one model by maximum marginal likelihood.
///
/// `group` may be null when the dataset holds a single group. `family` is
/// one of linear/exponential/logistic/gompertz/richards; `mode` is
/// parametric or semiparametric; `deviations` is none or random-walk.
/// `scale` multiplies all values at ingest (pass 1.0 for none). Pass 0 for
/// `max_evals`/`multistart` to use the defaults.
#[no_mangle]
pub unsafe extern "C" fn gss_fit(
    data: *const GssDataset,
    group: *const c_char,
    family: *const c_char,
    mode: *const c_char,
    deviations: *const c_char,
    scale: f64,
    seed: u64,
    max_evals: usize,
    multistart: usize,
    out: *mut *mut GssFit,
) -> c_int {
    if out.is_null() {
        set_error("out is null");
        return GSS_ERR_NULL;
    }
    if data.is_null() {
        set_error("data is null");
        return GSS_ERR_NULL;
    }
    let dataset = unsafe { &*data };
    let family = match unsafe { cstr(family, "family") } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let mode = match unsafe { cstr(mode, "mode") } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let deviations = match unsafe { cstr(deviations, "deviations") } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let group = if group.is_null() {
        None
    } else {
        match unsafe { cstr(group, "group") } {
            Ok(s) => Some(s.to_string()),
            Err(code) => return code,
        }
    };

    match fit_impl(dataset, group, family, mode, deviations, scale, seed, max_evals, multistart) {
        Ok(fitted) => {
            unsafe {
                *out = Box::into_raw(Box::new(fitted));
            }
            GSS_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            code_of(&e)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_impl(
    dataset: &GssDataset,
    group: Option<String>,
    family: &str,
    mode: &str,
    deviations: &str,
    scale: f64,
    seed: u64,
    max_evals: usize,
    multistart: usize,
) -> Result<GssFit, Error> {
    let scaled = scale_values(&dataset.data, scale)?;
    let groups = scaled.groups();
    let group = match group {
        Some(g) => g,
        None if groups.len() == 1 => groups[0].clone(),
        None => {
            return Err(Error::Usage(format!(
                "dataset has several groups; pass one of: {}",
                groups.join(", ")
            )))
        }
    };
    let series = ObservationSeries::from_dataset(&scaled, &group)?;

    let mut spec = GrowthModelSpec::new(family.parse()?, mode.parse()?);
    spec.deviations = deviations.parse()?;
    spec.replicates = series.replicates().len();
    if spec.mode == growthss::models::Mode::Semiparametric {
        spec.noise.sigma2_eta = 1.0;
    }
    if spec.deviations == growthss::models::Deviations::RandomWalk {
        spec.noise.sigma2_dev = 1e-3;
    }

    let mut cfg = OptimizerConfig { seed, ..Default::default() };
    if max_evals > 0 {
        cfg.max_evals = max_evals;
    }
    if multistart > 0 {
        cfg.multistart = multistart;
    }
    let fitted = fit(&spec, &series, &cfg)?;
    Ok(GssFit {
        fit: fitted,
        group,
        scale,
        fingerprint: dataset.fingerprint.clone(),
        n_records: dataset.data.len(),
    })
}

#[no_mangle]
pub unsafe extern "C" fn gss_fit_free(fit: *mut GssFit) {
    if !fit.is_null() {
        drop(unsafe { Box::from_raw(fit) });
    }
}

/// Marginal log-likelihood of the fit (NaN for a null handle).
#[no_mangle]
pub unsafe extern "C" fn gss_fit_loglik(fit: *const GssFit) -> f64 {
    if fit.is_null() {
        return f64::NAN;
    }
    unsafe { &*fit }.fit.loglik
}

#[no_mangle]
pub unsafe extern "C" fn gss_fit_bic(fit: *const GssFit) -> f64 {
    if fit.is_null() {
        return f64::NAN;
    }
    unsafe { &*fit }.fit.bic
}

/// Non-missing scalar observations used by the fit.
#[no_mangle]
pub unsafe extern "C" fn gss_fit_n_used(fit: *const GssFit) -> usize {
    if fit.is_null() {
        return 0;
    }
    unsafe { &*fit }.fit.n_used
}

/// Absorbed diffuse dimension.
#[no_mangle]
pub unsafe extern "C" fn gss_fit_diffuse_count(fit: *const GssFit) -> usize {
    if fit.is_null() {
        return 0;
    }
    unsafe { &*fit }.fit.d
}

/// Estimated parameter by name (phi, rho, nu, sigma2_eps, sigma2_eta,
/// sigma2_dev, constant, scale). NaN when absent or not applicable.
#[no_mangle]
pub unsafe extern "C" fn gss_fit_parameter(fit: *const GssFit, name: *const c_char) -> f64 {
    if fit.is_null() {
        return f64::NAN;
    }
    let Ok(name) = (unsafe { cstr(name, "name") }) else {
        return f64::NAN;
    };
    let handle = unsafe { &*fit };
    let spec = handle.fit.fitted_spec();
    match name {
        "phi" if spec.family.uses_phi() => spec.curve.phi,
        "rho" if spec.family.uses_rho() => spec.curve.rho,
        "nu" if spec.family.uses_nu() => spec.curve.nu,
        "sigma2_eps" => spec.noise.sigma2_eps,
        "sigma2_eta" if spec.mode == growthss::models::Mode::Semiparametric => {
            spec.noise.sigma2_eta
        }
        "sigma2_dev" if spec.deviations == growthss::models::Deviations::RandomWalk => {
            spec.noise.sigma2_dev
        }
        "constant" => handle.fit.constant_scale.map_or(f64::NAN, |(c, _)| c),
        "scale" => handle.fit.constant_scale.map_or(f64::NAN, |(_, s)| s),
        _ => f64::NAN,
    }
}

/// Number of grid times of the smoothed mean curve.
#[no_mangle]
pub unsafe extern "C" fn gss_fit_curve_len(fit: *const GssFit) -> usize {
    if fit.is_null() {
        return 0;
    }
    unsafe { &*fit }.fit.mean_curve.len()
}

/// Copy the smoothed mean curve into caller-provided arrays of length
/// `len` (from `gss_fit_curve_len`). Any of the output pointers may be
/// null to skip that column.
#[no_mangle]
pub unsafe extern "C" fn gss_fit_mean_curve(
    fit: *const GssFit,
    times: *mut f64,
    estimates: *mut f64,
    variances: *mut f64,
    len: usize,
) -> c_int {
    if fit.is_null() {
        set_error("fit is null");
        return GSS_ERR_NULL;
    }
    let curve = &unsafe { &*fit }.fit.mean_curve;
    if len != curve.len() {
        set_error(&format!("buffer length {len} does not match curve length {}", curve.len()));
        return GSS_ERR_USAGE;
    }
    unsafe {
        if !times.is_null() {
            std::ptr::copy_nonoverlapping(curve.times.as_ptr(), times, len);
        }
        if !estimates.is_null() {
            std::ptr::copy_nonoverlapping(curve.estimates.as_ptr(), estimates, len);
        }
        if !variances.is_null() {
            std::ptr::copy_nonoverlapping(curve.variances.as_ptr(), variances, len);
        }
    }
    GSS_OK
}

/// Write the fit as a JSON artifact (the same format the CLI produces).
#[no_mangle]
pub unsafe extern "C" fn gss_fit_write_artifact(
    fit: *const GssFit,
    path: *const c_char,
) -> c_int {
    if fit.is_null() {
        set_error("fit is null");
        return GSS_ERR_NULL;
    }
    let path = match unsafe { cstr(path, "path") } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let handle = unsafe { &*fit };
    let result = FitArtifact::from_fit(
        &handle.fit,
        &handle.group,
        handle.scale,
        None,
        handle.fingerprint.clone(),
        handle.n_records,
        0.95,
    )
    .and_then(|a| a.write(path));
    match result {
        Ok(()) => GSS_OK,
        Err(e) => {
            set_error(&e.to_string());
            code_of(&e)
        }
    }
}
