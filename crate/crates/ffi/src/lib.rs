//! C interface to the online frame-time model.
//!
//! Every fallible call returns an [`FtStatus`]; on failure the message is
//! kept per thread and can be read with [`ft_last_error_message`]. Models
//! are opaque [`FtModel`] handles released with [`ft_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use frametime::estimator::{op_count, Algo, DcdParams};
use frametime::model::{FrameTimeModel, PredictionContext, SensitivityMethod};
use frametime::trace::FrequencyTable;
use frametime::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Dimension = 4,
    NonFinite = 5,
    Degenerate = 6,
    Panic = 7,
    Other = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtAlgo {
    Rls = 0,
    DcdRls = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtSensitivityMethod {
    TwoPoint = 0,
    Lagrange3 = 1,
}

/// Opaque model handle.
pub struct FtModel {
    inner: FrameTimeModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FtStatus {
    match e {
        Error::Domain(_) | Error::FrequencyTable(_) => FtStatus::Domain,
        Error::Dimension { .. } => FtStatus::Dimension,
        Error::NonFinite(_) => FtStatus::NonFinite,
        Error::Degenerate(_) => FtStatus::Degenerate,
        Error::Config(_) | Error::Empty(_) => FtStatus::InvalidArgument,
        _ => FtStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (FtStatus, String)>) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside frametime".into());
            FtStatus::Panic
        }
    }
}

fn lib(e: Error) -> (FtStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FtStatus, String) {
    (FtStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `ptr` must be null only when `len` is 0, otherwise valid for `len` reads.
unsafe fn slice<'a>(
    ptr: *const f64,
    len: usize,
    what: &str,
) -> Result<&'a [f64], (FtStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `model` must be null or a live handle from this library.
unsafe fn model_ref<'a>(model: *const FtModel) -> Result<&'a FtModel, (FtStatus, String)> {
    model.as_ref().ok_or_else(|| null("model"))
}

/// # Safety
/// `model` must be null or a live handle from this library.
unsafe fn model_mut<'a>(model: *mut FtModel) -> Result<&'a mut FtModel, (FtStatus, String)> {
    model.as_mut().ok_or_else(|| null("model"))
}

fn write_out<T>(out: *mut T, value: T) -> Result<(), (FtStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: checked non-null; the caller provides a writable location.
    unsafe { out.write(value) };
    Ok(())
}

fn boxed(model: FrameTimeModel, out: *mut *mut FtModel) -> Result<(), (FtStatus, String)> {
    write_out(out, Box::into_raw(Box::new(FtModel { inner: model })))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ft_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Arithmetic operations per update for `m` regressors.
#[no_mangle]
pub extern "C" fn ft_op_count(m: usize, algo: FtAlgo) -> usize {
    op_count(
        m,
        match algo {
            FtAlgo::Rls => Algo::Rls,
            FtAlgo::DcdRls => Algo::DcdRls,
        },
    )
}

/// RLS model over `counters` selected counters with default settings.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn ft_model_new_rls(counters: usize, out: *mut *mut FtModel) -> FtStatus {
    guard(|| boxed(FrameTimeModel::rls(counters).map_err(lib)?, out))
}

/// DCD-RLS model. `nu` coordinate updates per sample, `mb` amplitude levels
/// starting at `h_amp`.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn ft_model_new_dcd(
    counters: usize,
    nu: usize,
    mb: u32,
    h_amp: f64,
    out: *mut *mut FtModel,
) -> FtStatus {
    guard(|| {
        let params = DcdParams { nu, mb, h_amp };
        boxed(FrameTimeModel::dcd(counters, params).map_err(lib)?, out)
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ft_model_free(model: *mut FtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of regressors, two frequency terms plus the counters.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ft_model_dim(model: *const FtModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// Copies the coefficients in raw units into `out`, which must hold at
/// least [`ft_model_dim`] values.
///
/// # Safety
/// `model` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ft_model_coefficients(
    model: *const FtModel,
    out: *mut f64,
    len: usize,
) -> FtStatus {
    guard(|| {
        let a = model_ref(model)?.inner.raw_coefficients();
        if len < a.len() {
            return Err((
                FtStatus::Dimension,
                format!("buffer holds {len}, need {}", a.len()),
            ));
        }
        if out.is_null() {
            return Err(null("output pointer"));
        }
        ptr::copy_nonoverlapping(a.as_ptr(), out, a.len());
        Ok(())
    })
}

/// Feeds raw counter values to the scale calibration window.
///
/// # Safety
/// `counters` must be valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn ft_model_calibrate(
    model: *mut FtModel,
    counters: *const f64,
    len: usize,
) -> FtStatus {
    guard(|| {
        let m = model_mut(model)?;
        let c = slice(counters, len, "counters")?;
        m.inner.calibrate(c).map_err(lib)
    })
}

/// # Safety
/// `deltas` must be null only when `len` is 0, otherwise valid for `len`
/// reads.
unsafe fn context(
    prev_frame_time: f64,
    prev_freq: f64,
    cur_freq: f64,
    deltas: *const f64,
    len: usize,
) -> Result<PredictionContext, (FtStatus, String)> {
    Ok(PredictionContext {
        prev_frame_time,
        prev_freq,
        cur_freq,
        counter_deltas: slice(deltas, len, "counter deltas")?.to_vec(),
    })
}

/// Predicted frame time for the interval that starts at `cur_freq`.
///
/// # Safety
/// `deltas` must be valid for `len` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn ft_model_predict(
    model: *const FtModel,
    prev_frame_time: f64,
    prev_freq: f64,
    cur_freq: f64,
    deltas: *const f64,
    len: usize,
    out: *mut f64,
) -> FtStatus {
    guard(|| {
        let m = model_ref(model)?;
        let ctx = context(prev_frame_time, prev_freq, cur_freq, deltas, len)?;
        let p = m.inner.predict_frame_time(&ctx).map_err(lib)?;
        write_out(out, p.frame_time)
    })
}

/// Learns from the realized frame time of the interval.
///
/// # Safety
/// `deltas` must be valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn ft_model_update(
    model: *mut FtModel,
    prev_frame_time: f64,
    prev_freq: f64,
    cur_freq: f64,
    deltas: *const f64,
    len: usize,
    actual_frame_time: f64,
) -> FtStatus {
    guard(|| {
        let m = model_mut(model)?;
        let ctx = context(prev_frame_time, prev_freq, cur_freq, deltas, len)?;
        m.inner
            .update(&ctx, actual_frame_time)
            .map(|_| ())
            .map_err(lib)
    })
}

/// Predicted frame-time change when moving from `f_k` to `f_new`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ft_model_candidate_delta(
    model: *const FtModel,
    frame_time: f64,
    f_k: f64,
    f_new: f64,
    out: *mut f64,
) -> FtStatus {
    guard(|| {
        let d = model_ref(model)?
            .inner
            .candidate_delta(frame_time, f_k, f_new)
            .map_err(lib)?;
        write_out(out, d)
    })
}

/// Frame-time sensitivity in ms per MHz at table frequency `f_k`.
/// `method` may be null.
///
/// # Safety
/// `table` must be valid for `table_len` reads, `out` for one write and
/// `method` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ft_model_sensitivity(
    model: *const FtModel,
    frame_time: f64,
    table: *const f64,
    table_len: usize,
    f_k: f64,
    out: *mut f64,
    method: *mut FtSensitivityMethod,
) -> FtStatus {
    guard(|| {
        let m = model_ref(model)?;
        let freqs = slice(table, table_len, "table")?.to_vec();
        let table = FrequencyTable::new(freqs).map_err(lib)?;
        let s = m.inner.sensitivity(frame_time, &table, f_k).map_err(lib)?;
        write_out(out, s.dtf_df)?;
        if !method.is_null() {
            method.write(match s.method {
                SensitivityMethod::TwoPoint => FtSensitivityMethod::TwoPoint,
                SensitivityMethod::Lagrange3 => FtSensitivityMethod::Lagrange3,
            });
        }
        Ok(())
    })
}
