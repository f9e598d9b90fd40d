//! C ABI for `gapkit`.
//!
//! Matrices live behind the opaque `GapkitMatrix` handle. Every fallible call
//! returns a `GapkitStatus`; on failure `gapkit_last_error_message` describes
//! the error for the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use gapkit::backend::Backend;
use gapkit::error::Error;
use gapkit::gapfinder::{qeig, qgap_const, GapConfig, DEFAULT_GAP_MIN};
use gapkit::hermitian::{eig_reference, HermitianMatrix};
use gapkit::hmat::read_hmat;
use gapkit::instances::gen_planted_gap;
use gapkit::ledger::CostLedger;
use gapkit::qube::EncodingMode;
use gapkit::rng::Stream;
use num_complex::Complex64;

/// Opaque Hermitian matrix.
pub struct GapkitMatrix {
    inner: HermitianMatrix,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapkitStatus {
    Ok = 0,
    /// The gap search ended without a detection; ledger fields are still set.
    NotFound = 1,
    /// No refinement point landed in the gap; ledger fields are still set.
    DetectionFailed = 2,
    InvalidArgument = 3,
    Capacity = 4,
    Contract = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapkitBackend {
    Sampling = 0,
    Deterministic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapkitEncoding {
    Exact = 0,
    Frobenius = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapkitOptions {
    pub seed: u64,
    pub backend: GapkitBackend,
    pub encoding: GapkitEncoding,
    /// Smallest gap width searched; values <= 0 select the default.
    pub gap_min: f64,
}

/// Cost counters, saturated at `UINT64_MAX`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GapkitLedger {
    pub queries_uh: u64,
    pub queries_state_prep: u64,
    pub elementary_gates: u64,
    pub max_qubits: u64,
    pub classical_samples: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GapkitConstResult {
    pub mu_hat: f64,
    pub gap_hat: f64,
    pub iterations: u32,
    pub probes: u64,
    pub ledger: GapkitLedger,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GapkitEigResult {
    pub lambda_k: f64,
    pub lambda_k1: f64,
    pub mu: f64,
    pub gap: f64,
    pub mu_hat: f64,
    pub gap_hat: f64,
    pub probes: u64,
    pub ledger: GapkitLedger,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> GapkitStatus {
    match e {
        Error::NotFound { .. } => GapkitStatus::NotFound,
        Error::DetectionFailed { .. } => GapkitStatus::DetectionFailed,
        Error::Input(_) | Error::Parameter(_) | Error::Parse { .. } => GapkitStatus::InvalidArgument,
        Error::Capacity(_) => GapkitStatus::Capacity,
        Error::Contract(_) => GapkitStatus::Contract,
        Error::Io(_) => GapkitStatus::Io,
    }
}

fn fail(status: GapkitStatus, msg: impl Into<String>) -> GapkitStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> GapkitStatus {
    fail(status_of(e), e.to_string())
}

/// Runs `f`, converting panics into `GapkitStatus::Panic`.
fn guard(f: impl FnOnce() -> GapkitStatus) -> GapkitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == GapkitStatus::Ok {
                set_error("");
            }
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(GapkitStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn saturate(v: u128) -> u64 {
    u64::try_from(v).unwrap_or(u64::MAX)
}

fn ledger(l: &CostLedger) -> GapkitLedger {
    GapkitLedger {
        queries_uh: saturate(l.queries_uh),
        queries_state_prep: saturate(l.queries_state_prep),
        elementary_gates: saturate(l.elementary_gates),
        max_qubits: saturate(l.max_qubits),
        classical_samples: saturate(l.classical_samples),
    }
}

fn config(opts: &GapkitOptions) -> GapConfig {
    GapConfig {
        backend: match opts.backend {
            GapkitBackend::Sampling => Backend::Sampling,
            GapkitBackend::Deterministic => Backend::Deterministic,
        },
        encoding: match opts.encoding {
            GapkitEncoding::Exact => EncodingMode::Exact,
            GapkitEncoding::Frobenius => EncodingMode::Frobenius,
        },
        gap_min: if opts.gap_min > 0.0 { opts.gap_min } else { DEFAULT_GAP_MIN },
    }
}

fn store(out: *mut *mut GapkitMatrix, inner: HermitianMatrix) -> GapkitStatus {
    // SAFETY: callers checked `out` for null; the caller owns the pointee.
    unsafe { *out = Box::into_raw(Box::new(GapkitMatrix { inner })) };
    GapkitStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gapkit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next `gapkit_*` call on the same thread.
#[no_mangle]
pub extern "C" fn gapkit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn gapkit_options_default() -> GapkitOptions {
    GapkitOptions { seed: 0, backend: GapkitBackend::Sampling, encoding: GapkitEncoding::Exact, gap_min: DEFAULT_GAP_MIN }
}

/// Creates a matrix from `n*n` row-major entries. `imag` may be null for a
/// real matrix. The input must be Hermitian to within `1e-12` relative.
///
/// # Safety
/// `real` (and `imag` unless null) must point to `n*n` readable doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gapkit_matrix_new(n: usize, real: *const f64, imag: *const f64, out: *mut *mut GapkitMatrix) -> GapkitStatus {
    guard(|| {
        if real.is_null() || out.is_null() {
            return fail(GapkitStatus::NullPointer, "null pointer argument");
        }
        let Some(len) = n.checked_mul(n).filter(|&l| l > 0) else {
            return fail(GapkitStatus::InvalidArgument, format!("invalid dimension {n}"));
        };
        // SAFETY: the caller guarantees `len` readable elements.
        let re = unsafe { std::slice::from_raw_parts(real, len) };
        let im = (!imag.is_null()).then(|| unsafe { std::slice::from_raw_parts(imag, len) });
        let at = |i: usize, j: usize| Complex64::new(re[i * n + j], im.map_or(0.0, |v| v[i * n + j]));
        let scale = (0..len).map(|p| at(p / n, p % n).norm()).fold(0.0, f64::max).max(1.0);
        for i in 0..n {
            for j in i..n {
                if (at(i, j) - at(j, i).conj()).norm() > 1e-12 * scale {
                    return fail(GapkitStatus::InvalidArgument, format!("matrix is not Hermitian at ({i}, {j})"));
                }
            }
        }
        match HermitianMatrix::from_upper(n, at) {
            Ok(h) => store(out, h),
            Err(e) => from_error(&e),
        }
    })
}

/// Reads an HMAT v1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gapkit_matrix_from_hmat_file(path: *const c_char, out: *mut *mut GapkitMatrix) -> GapkitStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(GapkitStatus::NullPointer, "null pointer argument");
        }
        // SAFETY: the caller guarantees a NUL-terminated string.
        let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
            return fail(GapkitStatus::InvalidArgument, "path is not valid UTF-8");
        };
        match read_hmat(path) {
            Ok(h) => store(out, h),
            Err(e) => from_error(&e),
        }
    })
}

/// Random `n x n` matrix with eigenvalues in `[-1/2, 1/2]` whose `k`-th gap is
/// exactly `gap`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gapkit_matrix_planted(n: usize, k: usize, gap: f64, seed: u64, out: *mut *mut GapkitMatrix) -> GapkitStatus {
    guard(|| {
        if out.is_null() {
            return fail(GapkitStatus::NullPointer, "null pointer argument");
        }
        match gen_planted_gap(n, k, gap, seed) {
            Ok(inst) => store(out, inst.matrix),
            Err(e) => from_error(&e),
        }
    })
}

/// Releases a matrix. Null is ignored.
///
/// # Safety
/// `m` must come from a `gapkit_matrix_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gapkit_matrix_free(m: *mut GapkitMatrix) {
    if !m.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Dimension, or 0 for null.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gapkit_matrix_dim(m: *const GapkitMatrix) -> usize {
    // SAFETY: the caller guarantees a live handle or null.
    unsafe { m.as_ref() }.map_or(0, |m| m.inner.dim())
}

/// Writes all eigenvalues in non-increasing order; `len` must equal the dimension.
///
/// # Safety
/// `m` must be a live handle; `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gapkit_matrix_eigenvalues(m: *const GapkitMatrix, out: *mut f64, len: usize) -> GapkitStatus {
    guard(|| {
        // SAFETY: the caller guarantees a live handle or null.
        let Some(m) = (unsafe { m.as_ref() }) else {
            return fail(GapkitStatus::NullPointer, "null matrix");
        };
        if out.is_null() {
            return fail(GapkitStatus::NullPointer, "null output buffer");
        }
        if len != m.inner.dim() {
            return fail(GapkitStatus::InvalidArgument, format!("buffer length {len} != dimension {}", m.inner.dim()));
        }
        match eig_reference(&m.inner) {
            Ok(d) => {
                // SAFETY: `out` holds `len` doubles.
                unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(&d.eigenvalues);
                GapkitStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Constant-factor estimate of the `k`-th gap and its midpoint.
///
/// # Safety
/// `m` must be a live handle; `opts` may be null (defaults); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gapkit_qgap_const(
    m: *const GapkitMatrix,
    k: usize,
    delta: f64,
    opts: *const GapkitOptions,
    out: *mut GapkitConstResult,
) -> GapkitStatus {
    guard(|| {
        // SAFETY: the caller guarantees live pointers or null.
        let (Some(m), Some(out)) = (unsafe { m.as_ref() }, unsafe { out.as_mut() }) else {
            return fail(GapkitStatus::NullPointer, "null pointer argument");
        };
        let opts = unsafe { opts.as_ref() }.copied().unwrap_or_else(|| gapkit_options_default());
        *out = GapkitConstResult::default();
        match qgap_const(&m.inner, k, delta, &config(&opts), Stream::new(opts.seed)) {
            Ok(r) => {
                *out = GapkitConstResult {
                    mu_hat: r.mu_hat,
                    gap_hat: r.gap_hat,
                    iterations: r.iterations,
                    probes: r.probes as u64,
                    ledger: ledger(&r.ledger),
                };
                GapkitStatus::Ok
            }
            Err(e) => {
                if let Error::NotFound { ledger: l, .. } | Error::DetectionFailed { ledger: l, .. } = &e {
                    out.ledger = ledger(l);
                }
                from_error(&e)
            }
        }
    })
}

/// `eps`-accurate estimates of `λ_k`, `λ_{k+1}`, the midpoint and the gap.
///
/// # Safety
/// `m` must be a live handle; `opts` may be null (defaults); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gapkit_qeig(
    m: *const GapkitMatrix,
    k: usize,
    delta: f64,
    eps: f64,
    opts: *const GapkitOptions,
    out: *mut GapkitEigResult,
) -> GapkitStatus {
    guard(|| {
        // SAFETY: the caller guarantees live pointers or null.
        let (Some(m), Some(out)) = (unsafe { m.as_ref() }, unsafe { out.as_mut() }) else {
            return fail(GapkitStatus::NullPointer, "null pointer argument");
        };
        let opts = unsafe { opts.as_ref() }.copied().unwrap_or_else(|| gapkit_options_default());
        *out = GapkitEigResult::default();
        match qeig(&m.inner, k, delta, eps, &config(&opts), Stream::new(opts.seed)) {
            Ok(r) => {
                *out = GapkitEigResult {
                    lambda_k: r.lambda_k,
                    lambda_k1: r.lambda_k1,
                    mu: r.mu,
                    gap: r.gap,
                    mu_hat: r.stage_one.mu_hat,
                    gap_hat: r.stage_one.gap_hat,
                    probes: r.probes as u64,
                    ledger: ledger(&r.ledger),
                };
                GapkitStatus::Ok
            }
            Err(e) => {
                if let Error::NotFound { ledger: l, .. } | Error::DetectionFailed { ledger: l, .. } = &e {
                    out.ledger = ledger(l);
                }
                from_error(&e)
            }
        }
    })
}
