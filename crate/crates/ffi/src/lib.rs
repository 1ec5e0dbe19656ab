//! C ABI for annealfe.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `*_free`. Every fallible call returns an [`AfeStatus`]; on failure the
//! message is kept per thread and read back with [`afe_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use annealfe::mrf::exact_log_z;
use annealfe::{
    estimators, BipartiteModel, Error, KernelSpec, Layer, Method, RunConfig, RunResult, Schedule,
    SpinState,
};

/// Opaque model handle.
pub struct AfeModel(BipartiteModel);

/// Opaque estimation result handle.
pub struct AfeResult(RunResult);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfeStatus {
    Ok = 0,
    InvalidArgument = 1,
    Capacity = 2,
    Io = 3,
    Parse = 4,
    NullPointer = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfeMethod {
    Ais = 0,
    MaisV = 1,
    MaisH = 2,
    Auto = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfeKernel {
    BlockedGibbs = 0,
    MhAugmented = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> AfeStatus {
    match err {
        Error::InvalidArgument(_) => AfeStatus::InvalidArgument,
        Error::Capacity { .. } => AfeStatus::Capacity,
        Error::Io(_) => AfeStatus::Io,
        Error::Json(_) | Error::Csv(_) | Error::Config(_) => AfeStatus::Parse,
    }
}

struct Fail(AfeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(AfeStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AfeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            AfeStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("panic: {msg}"));
            AfeStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn str_in<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(AfeStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn model_ref<'a>(model: *const AfeModel) -> Result<&'a BipartiteModel, Fail> {
    model.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

unsafe fn result_ref<'a>(result: *const AfeResult) -> Result<&'a RunResult, Fail> {
    result.as_ref().map(|r| &r.0).ok_or_else(|| null("result"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// including the terminator, so a zero-length call sizes the buffer.
///
/// # Safety
/// `buf` must be writable for `len` bytes, or null when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn afe_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Builds a model from bias vectors and a row-major `nv x nh` coupling buffer.
///
/// # Safety
/// The input arrays must hold `nv`, `nh` and `nv * nh` doubles; `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn afe_model_new(
    nv: usize,
    nh: usize,
    visible_bias: *const f64,
    hidden_bias: *const f64,
    coupling: *const f64,
    temperature: f64,
    out: *mut *mut AfeModel,
) -> AfeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cells = nv
            .checked_mul(nh)
            .ok_or_else(|| Fail(AfeStatus::InvalidArgument, "nv * nh overflows".into()))?;
        let vb = slice_in(visible_bias, nv, "visible_bias")?.to_vec();
        let hb = slice_in(hidden_bias, nh, "hidden_bias")?.to_vec();
        let w = slice_in(coupling, cells, "coupling")?.to_vec();
        let model = BipartiteModel::from_flat(vb, hb, w, temperature)?;
        *out = Box::into_raw(Box::new(AfeModel(model)));
        Ok(())
    })
}

/// Parses a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn afe_model_from_json(json: *const c_char, out: *mut *mut AfeModel) -> AfeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = BipartiteModel::from_json_str(str_in(json, "json")?)?;
        *out = Box::into_raw(Box::new(AfeModel(model)));
        Ok(())
    })
}

/// Reads a model JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn afe_model_load(path: *const c_char, out: *mut *mut AfeModel) -> AfeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = BipartiteModel::load_json(str_in(path, "path")?)?;
        *out = Box::into_raw(Box::new(AfeModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from an `afe_model_*` constructor and not be freed yet.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn afe_model_free(model: *mut AfeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of visible units, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn afe_model_num_visible(model: *const AfeModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.num_visible())
}

/// Number of hidden units, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn afe_model_num_hidden(model: *const AfeModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.num_hidden())
}

/// Energy of a joint configuration; spins are `-1` or `+1`.
///
/// # Safety
/// `v` and `h` must hold `nv` and `nh` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn afe_model_energy(
    model: *const AfeModel,
    v: *const i8,
    nv: usize,
    h: *const i8,
    nh: usize,
    out: *mut f64,
) -> AfeStatus {
    guard(|| {
        let m = model_ref(model)?;
        let v = SpinState::new(slice_in(v, nv, "v")?.to_vec(), Layer::Visible)?;
        let h = SpinState::new(slice_in(h, nh, "h")?.to_vec(), Layer::Hidden)?;
        write_out(out, m.energy(&v, &h)?, "out")
    })
}

/// Exact `ln Z` of the model at inverse-temperature scale `beta`.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn afe_exact_log_z(model: *const AfeModel, beta: f64, out: *mut f64) -> AfeStatus {
    guard(|| {
        let m = model_ref(model)?;
        write_out(out, exact_log_z(m, beta)?, "out")
    })
}

/// Runs one estimate with a linear schedule of `k` steps and `n` sequences.
/// `mh_sweeps` is ignored for the blocked Gibbs kernel.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn afe_estimate(
    model: *const AfeModel,
    method: AfeMethod,
    kernel: AfeKernel,
    mh_sweeps: u32,
    k: usize,
    n: usize,
    seed: u64,
    out: *mut *mut AfeResult,
) -> AfeStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let method = match method {
            AfeMethod::Ais => Method::Ais,
            AfeMethod::MaisV => Method::MaisV,
            AfeMethod::MaisH => Method::MaisH,
            AfeMethod::Auto => Method::Auto,
        };
        let spec = match kernel {
            AfeKernel::BlockedGibbs => KernelSpec::blocked_gibbs(),
            AfeKernel::MhAugmented => KernelSpec::mh_augmented(mh_sweeps),
        };
        let schedule = Schedule::linear(k)?;
        let result = estimators::estimate(m, &schedule, &RunConfig::new(n, method, spec, seed))?;
        *out = Box::into_raw(Box::new(AfeResult(result)));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn afe_result_log_z(result: *const AfeResult, out: *mut f64) -> AfeStatus {
    guard(|| write_out(out, result_ref(result)?.log_z_estimate, "out"))
}

/// Total free energy estimate `-ln Z`.
///
/// # Safety
/// `result` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn afe_result_free_energy(result: *const AfeResult, out: *mut f64) -> AfeStatus {
    guard(|| write_out(out, result_ref(result)?.free_energy_estimate, "out"))
}

/// # Safety
/// `result` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn afe_result_per_variable_free_energy(
    result: *const AfeResult,
    out: *mut f64,
) -> AfeStatus {
    guard(|| write_out(out, result_ref(result)?.per_variable_free_energy, "out"))
}

/// # Safety
/// `result` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn afe_result_effective_sample_size(
    result: *const AfeResult,
    out: *mut f64,
) -> AfeStatus {
    guard(|| write_out(out, result_ref(result)?.effective_sample_size, "out"))
}

/// Number of per-sequence log weights, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn afe_result_num_weights(result: *const AfeResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.log_weights.len())
}

/// Copies the log weights into `buf`, which must have room for all of them.
///
/// # Safety
/// `result` must be a live handle; `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn afe_result_copy_log_weights(
    result: *const AfeResult,
    buf: *mut f64,
    len: usize,
) -> AfeStatus {
    guard(|| {
        let weights = &result_ref(result)?.log_weights;
        if len < weights.len() {
            return Err(Fail(
                AfeStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", weights.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(weights.as_ptr(), buf, weights.len());
        Ok(())
    })
}

/// # Safety
/// `result` must come from [`afe_estimate`] and not be freed yet. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn afe_result_free(result: *mut AfeResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
