//! C ABI over `sparse_recovery`.
//!
//! Configurations and layouts are opaque heap handles created and released
//! through this API. Every fallible call returns an [`SrStatus`]; on failure
//! a message is kept per thread and can be copied out with
//! [`sr_last_error_message`]. Output goes into caller-owned buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sparse_recovery::signals::{gen_signal, SignalSpec};
use sparse_recovery::{
    recover, DenseSignal, Error, MeasurementLayout, MeasurementVector, RecoveryConfig,
};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A parameter or configuration was rejected.
    InvalidArgument = 2,
    /// A buffer length does not match N or m.
    LengthMismatch = 3,
    /// The output buffers are too small; the required count was written.
    BufferTooSmall = 4,
    /// A panic or other internal failure.
    Internal = 5,
}

/// Opaque recovery configuration.
pub struct SrConfig {
    inner: RecoveryConfig,
}

/// Opaque measurement layout planned from an [`SrConfig`].
pub struct SrLayout {
    inner: MeasurementLayout,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: SrStatus, msg: impl Into<String>) -> SrStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> SrStatus {
    let status = match e {
        Error::LengthMismatch { .. } => SrStatus::LengthMismatch,
        _ => SrStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> SrStatus) -> SrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SrStatus::Internal, "panic inside sparse-recovery"),
    }
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `cap` bytes, into `buf`. Returns the full message length
/// excluding the terminator, so a return value `>= cap` means truncation.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sr_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a configuration with the default constants.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to release
/// with [`sr_config_free`].
#[no_mangle]
pub unsafe extern "C" fn sr_config_new(
    n: usize,
    k: usize,
    eps: f64,
    ell: usize,
    seed: u64,
    out: *mut *mut SrConfig,
) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return fail(SrStatus::NullPointer, "out is null");
        }
        match RecoveryConfig::new(n, k, eps, ell, seed) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SrConfig { inner }));
                SrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Overrides one named constant, e.g. `"c_reps"`.
///
/// # Safety
/// `config` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sr_config_set_constant(
    config: *mut SrConfig,
    name: *const c_char,
    value: f64,
) -> SrStatus {
    guard(|| {
        if config.is_null() || name.is_null() {
            return fail(SrStatus::NullPointer, "config or name is null");
        }
        let Ok(name) = CStr::from_ptr(name).to_str() else {
            return fail(SrStatus::InvalidArgument, "constant name is not UTF-8");
        };
        let config = &mut (*config).inner;
        let mut constants = config.constants;
        if !constants.set(name, value) {
            return fail(
                SrStatus::InvalidArgument,
                format!("unknown constant `{name}`"),
            );
        }
        match config.clone().with_constants(constants) {
            Ok(c) => {
                *config = c;
                SrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `config` must be null or a handle from [`sr_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sr_config_free(config: *mut SrConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Plans the measurement layout for `config`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer; on success it
/// receives a handle to release with [`sr_layout_free`].
#[no_mangle]
pub unsafe extern "C" fn sr_layout_plan(
    config: *const SrConfig,
    out: *mut *mut SrLayout,
) -> SrStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(SrStatus::NullPointer, "config or out is null");
        }
        match MeasurementLayout::plan(&(*config).inner) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SrLayout { inner }));
                SrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Signal length N of a layout, or 0 for a null handle.
///
/// # Safety
/// `layout` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sr_layout_n(layout: *const SrLayout) -> usize {
    layout.as_ref().map_or(0, |l| l.inner.n())
}

/// Number of measurements m of a layout, or 0 for a null handle.
///
/// # Safety
/// `layout` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sr_layout_m(layout: *const SrLayout) -> usize {
    layout.as_ref().map_or(0, |l| l.inner.m())
}

/// Releases a layout. Null is ignored.
///
/// # Safety
/// `layout` must be null or a handle from [`sr_layout_plan`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sr_layout_free(layout: *mut SrLayout) {
    if !layout.is_null() {
        drop(Box::from_raw(layout));
    }
}

/// Computes `mu = Φx`. `x_len` must equal N and `mu_len` must equal m.
///
/// # Safety
/// `x` must point to `x_len` readable doubles and `mu` to `mu_len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn sr_measure(
    layout: *const SrLayout,
    x: *const f64,
    x_len: usize,
    mu: *mut f64,
    mu_len: usize,
) -> SrStatus {
    guard(|| {
        if layout.is_null() || x.is_null() || mu.is_null() {
            return fail(SrStatus::NullPointer, "layout, x or mu is null");
        }
        let layout = &(*layout).inner;
        if x_len != layout.n() {
            return from_error(Error::LengthMismatch {
                expected: layout.n(),
                actual: x_len,
            });
        }
        if mu_len != layout.m() {
            return from_error(Error::LengthMismatch {
                expected: layout.m(),
                actual: mu_len,
            });
        }
        let signal = match DenseSignal::new(std::slice::from_raw_parts(x, x_len).to_vec()) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        match layout.measure(&signal) {
            Ok(v) => {
                ptr::copy_nonoverlapping(v.values().as_ptr(), mu, mu_len);
                SrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Recovers the sparse approximation from `mu` (length m). The support is
/// written in increasing order to `indices`/`values` (each `cap` long) and
/// its size to `*nnz`. When `cap` is too small, `*nnz` still receives the
/// required size and [`SrStatus::BufferTooSmall`] is returned.
///
/// # Safety
/// `mu` must point to `mu_len` readable doubles, `indices`/`values` to `cap`
/// writable elements each (may be null when `cap == 0`), and `nnz` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sr_recover(
    layout: *const SrLayout,
    mu: *const f64,
    mu_len: usize,
    indices: *mut usize,
    values: *mut f64,
    cap: usize,
    nnz: *mut usize,
) -> SrStatus {
    guard(|| {
        if layout.is_null() || mu.is_null() || nnz.is_null() {
            return fail(SrStatus::NullPointer, "layout, mu or nnz is null");
        }
        if cap > 0 && (indices.is_null() || values.is_null()) {
            return fail(SrStatus::NullPointer, "indices or values is null");
        }
        let layout = &(*layout).inner;
        let mu = match MeasurementVector::new(std::slice::from_raw_parts(mu, mu_len).to_vec()) {
            Ok(v) => v,
            Err(e) => return from_error(e),
        };
        let xhat = match recover(&mu, layout) {
            Ok(v) => v,
            Err(e) => return from_error(e),
        };
        *nnz = xhat.nnz();
        if xhat.nnz() > cap {
            return fail(
                SrStatus::BufferTooSmall,
                format!("need room for {} entries, got {cap}", xhat.nnz()),
            );
        }
        ptr::copy_nonoverlapping(xhat.indices().as_ptr(), indices, xhat.nnz());
        ptr::copy_nonoverlapping(xhat.values().as_ptr(), values, xhat.nnz());
        SrStatus::Ok
    })
}

/// Fills `x` (length `n`) with an exactly `k`-sparse test signal whose
/// spike magnitudes lie in [1, 10].
///
/// # Safety
/// `x` must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sr_generate_sparse_signal(
    n: usize,
    k: usize,
    seed: u64,
    x: *mut f64,
) -> SrStatus {
    guard(|| {
        if x.is_null() {
            return fail(SrStatus::NullPointer, "x is null");
        }
        match gen_signal(&SignalSpec::exact_sparse(n, k, seed)) {
            Ok((signal, _)) => {
                ptr::copy_nonoverlapping(signal.values().as_ptr(), x, n);
                SrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
