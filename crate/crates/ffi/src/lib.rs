//! C interface to `nlrm`.
//!
//! Objects are opaque handles created by `nlrm_*_new`/`*_solve`/`*_read` and
//! released with the matching `*_free`. Fallible functions return an
//! [`NlrmStatus`] and write their result through an out-pointer; on failure
//! the out-pointer is left untouched and [`nlrm_last_error_message`] describes
//! the error. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nlrm::{
    detect_jump, gen_synthetic, nlrm_solve, nmf_solve, read_matrix, write_matrix, DenseMatrix,
    Error, MatrixFormat, NlrmConfig, NlrmResult, NmfAlgorithm, NmfConfig, NmfResult,
    NoiseConvention, SyntheticSpec,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlrmStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad argument: shape, rank, tolerance, enum value, non-finite data.
    InvalidArgument = 2,
    /// Valid but degenerate input, such as an all-zero matrix.
    Degenerate = 3,
    NoConvergence = 4,
    Io = 5,
    /// Malformed file contents.
    Parse = 6,
    /// Internal error; the library caught a panic.
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlrmAlgorithm {
    Mu = 0,
    Hals = 1,
    Pg = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlrmNoiseConvention {
    /// The noise level is the entry variance.
    Variance = 0,
    /// The noise level is the entry standard deviation.
    StdDev = 1,
}

/// Dense row-major matrix.
pub struct NlrmMatrix(DenseMatrix);

/// Result of the nonnegative low-rank approximation.
pub struct NlrmApprox {
    result: NlrmResult,
    residual: f64,
}

/// Best factorization over all restarts of an NMF baseline.
pub struct NlrmNmf(NmfResult);

struct Failure {
    status: NlrmStatus,
    message: String,
}

impl Failure {
    fn new(status: NlrmStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(NlrmStatus::NullPointer, format!("{what} is null"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(NlrmStatus::InvalidArgument, message)
    }
}

fn status_of(e: &Error) -> NlrmStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::Contract(_) => NlrmStatus::InvalidArgument,
        Error::Degenerate(_) => NlrmStatus::Degenerate,
        Error::NoConvergence { .. } => NlrmStatus::NoConvergence,
        Error::AtIteration { source, .. } => status_of(source),
        Error::Parse { .. } | Error::Format { .. } | Error::Report(_) => NlrmStatus::Parse,
        Error::Io { .. } => NlrmStatus::Io,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(status_of(&e), e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NlrmStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            NlrmStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            set_last_error(&format!("internal error: {what}"));
            NlrmStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn algorithm_from(raw: u32) -> Result<NmfAlgorithm, Failure> {
    match raw {
        x if x == NlrmAlgorithm::Mu as u32 => Ok(NmfAlgorithm::Mu),
        x if x == NlrmAlgorithm::Hals as u32 => Ok(NmfAlgorithm::Hals),
        x if x == NlrmAlgorithm::Pg as u32 => Ok(NmfAlgorithm::Pg),
        other => Err(Failure::invalid(format!("unknown NMF algorithm {other}"))),
    }
}

fn convention_from(raw: u32) -> Result<NoiseConvention, Failure> {
    match raw {
        x if x == NlrmNoiseConvention::Variance as u32 => Ok(NoiseConvention::Variance),
        x if x == NlrmNoiseConvention::StdDev as u32 => Ok(NoiseConvention::StdDev),
        other => Err(Failure::invalid(format!(
            "unknown noise convention {other}"
        ))),
    }
}

/// Short static description of an [`NlrmStatus`] value. Never null.
#[no_mangle]
pub extern "C" fn nlrm_status_string(status: u32) -> *const c_char {
    let s: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"null pointer argument\0",
        2 => b"invalid argument\0",
        3 => b"degenerate input\0",
        4 => b"no convergence\0",
        5 => b"I/O error\0",
        6 => b"malformed input file\0",
        7 => b"internal error\0",
        _ => b"unknown status\0",
    };
    s.as_ptr().cast()
}

/// Message of the last failed call on this thread, or "" after a success.
/// Valid until the next library call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn nlrm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `rows * cols` row-major values from `data`, or zero-fills when
/// `data` is null.
///
/// # Safety
/// `data` must be null or point to `rows * cols` doubles; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn nlrm_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut NlrmMatrix,
) -> NlrmStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure::invalid("matrix size overflows"))?;
        let m = if data.is_null() {
            if rows == 0 || cols == 0 {
                return Err(Failure::invalid(format!("empty {rows}x{cols} matrix")));
            }
            DenseMatrix::zeros(rows, cols)
        } else {
            DenseMatrix::new(rows, cols, std::slice::from_raw_parts(data, len).to_vec())?
        };
        put(out, NlrmMatrix(m));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nlrm_matrix_free(m: *mut NlrmMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Row count, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlrm_matrix_rows(m: *const NlrmMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// Column count, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlrm_matrix_cols(m: *const NlrmMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// Copies the entries row-major into `out`, which holds `len >= rows * cols`
/// doubles.
///
/// # Safety
/// `m` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nlrm_matrix_copy_data(
    m: *const NlrmMatrix,
    out: *mut f64,
    len: usize,
) -> NlrmStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let data = m.0.as_slice();
        if len < data.len() {
            return Err(Failure::invalid(format!(
                "buffer holds {len} values, need {}",
                data.len()
            )));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
        Ok(())
    })
}

/// Reads a CSV file, or the binary format when the name ends in `.bin`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nlrm_matrix_read(
    path: *const c_char,
    out: *mut *mut NlrmMatrix,
) -> NlrmStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let m = read_matrix(&path, MatrixFormat::from_path(&path))?;
        put(out, NlrmMatrix(m));
        Ok(())
    })
}

/// Writes CSV, or the binary format when the name ends in `.bin`.
///
/// # Safety
/// `m` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nlrm_matrix_write(
    m: *const NlrmMatrix,
    path: *const c_char,
) -> NlrmStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        let path = path_arg(path)?;
        write_matrix(&m.0, &path, MatrixFormat::from_path(&path))?;
        Ok(())
    })
}

/// Synthetic input: a nonnegative product of planted rank `planted_rank`
/// plus Gaussian noise, or a uniform full-rank matrix when `planted_rank` is 0.
/// `convention` is an [`NlrmNoiseConvention`] value.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nlrm_generate(
    rows: usize,
    cols: usize,
    planted_rank: usize,
    noise_level: f64,
    convention: u32,
    seed: u64,
    out: *mut *mut NlrmMatrix,
) -> NlrmStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let base = if planted_rank == 0 {
            SyntheticSpec::uniform(rows, cols, seed)
        } else {
            SyntheticSpec::planted(rows, cols, planted_rank, seed)
        };
        let convention = convention_from(convention)?;
        let m = gen_synthetic(&base.with_noise(noise_level).with_convention(convention))?;
        put(out, NlrmMatrix(m));
        Ok(())
    })
}

/// Nearest nonnegative rank-`rank` matrix by alternating projections.
/// `tol <= 0` and `max_iter == 0` select the defaults (1e-10, 1000).
/// Stopping at `max_iter` is not an error; see [`nlrm_approx_converged`].
///
/// # Safety
/// `a` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nlrm_approx_solve(
    a: *const NlrmMatrix,
    rank: usize,
    tol: f64,
    max_iter: usize,
    out: *mut *mut NlrmApprox,
) -> NlrmStatus {
    guard(|| {
        let a = deref(a, "matrix")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let mut cfg = NlrmConfig::new(rank)?;
        if tol > 0.0 || tol.is_nan() {
            cfg = cfg.with_tol(tol);
        }
        if max_iter > 0 {
            cfg = cfg.with_max_iter(max_iter);
        }
        cfg.validate()?;
        let result = nlrm_solve(&a.0, &cfg)?;
        let residual = result.relative_residual(&a.0)?;
        put(out, NlrmApprox { result, residual });
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlrm_approx_free(h: *mut NlrmApprox) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// `||A - X||_F / ||A||_F`, NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlrm_approx_residual(h: *const NlrmApprox) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.residual)
}

/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlrm_approx_iterations(h: *const NlrmApprox) -> usize {
    h.as_ref().map_or(0, |h| h.result.iterations)
}

/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlrm_approx_converged(h: *const NlrmApprox) -> bool {
    h.as_ref().is_some_and(|h| h.result.converged)
}

/// The rank constraint the approximation was computed under.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlrm_approx_rank(h: *const NlrmApprox) -> usize {
    h.as_ref().map_or(0, |h| h.result.rank)
}

/// New matrix handle holding a copy of the approximation.
///
/// # Safety
/// `h` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nlrm_approx_matrix(
    h: *const NlrmApprox,
    out: *mut *mut NlrmMatrix,
) -> NlrmStatus {
    guard(|| {
        let h = deref(h, "approximation")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        put(out, NlrmMatrix(h.result.x.clone()));
        Ok(())
    })
}

/// Copies up to `len` leading singular values of the approximation into
/// `out`, descending, and stores the full count in `count` when non-null.
///
/// # Safety
/// `h` must be a live handle and `out` valid for `len` writes (may be null
/// when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn nlrm_approx_singular_values(
    h: *const NlrmApprox,
    out: *mut f64,
    len: usize,
    count: *mut usize,
) -> NlrmStatus {
    guard(|| {
        let h = deref(h, "approximation")?;
        let sigma = &h.result.svd_of_x.sigma;
        if len > 0 {
            if out.is_null() {
                return Err(Failure::null("out"));
            }
            let n = len.min(sigma.len());
            ptr::copy_nonoverlapping(sigma.as_ptr(), out, n);
        }
        if !count.is_null() {
            *count = sigma.len();
        }
        Ok(())
    })
}

/// NMF baseline with `restarts` seeded random initializations; the handle
/// holds the best one. `algorithm` is an [`NlrmAlgorithm`] value;
/// `max_iter == 0` selects the default (500).
///
/// # Safety
/// `a` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nlrm_nmf_solve(
    a: *const NlrmMatrix,
    rank: usize,
    algorithm: u32,
    restarts: usize,
    max_iter: usize,
    seed: u64,
    out: *mut *mut NlrmNmf,
) -> NlrmStatus {
    guard(|| {
        let a = deref(a, "matrix")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let mut cfg = NmfConfig::new(rank, algorithm_from(algorithm)?)
            .with_restarts(restarts)
            .with_seed(seed);
        if max_iter > 0 {
            cfg = cfg.with_max_iter(max_iter);
        }
        put(out, NlrmNmf(nmf_solve(&a.0, &cfg)?));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlrm_nmf_free(h: *mut NlrmNmf) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Best relative residual over the restarts, NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlrm_nmf_residual(h: *const NlrmNmf) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.0.residual)
}

/// Copies the `m x r` factor `B` (`which == 0`) or the `r x n` factor `C`
/// (`which == 1`) into a new matrix handle.
///
/// # Safety
/// `h` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nlrm_nmf_factor(
    h: *const NlrmNmf,
    which: u32,
    out: *mut *mut NlrmMatrix,
) -> NlrmStatus {
    guard(|| {
        let h = deref(h, "factorization")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let f = match which {
            0 => &h.0.b,
            1 => &h.0.c,
            other => {
                return Err(Failure::invalid(format!(
                    "factor index {other} is not 0 or 1"
                )))
            }
        };
        put(out, NlrmMatrix(f.clone()));
        Ok(())
    })
}

/// Largest consecutive ratio in a descending spectrum of `len >= 2` values.
/// `index` receives the number of values before the drop, `ratio` the ratio.
///
/// # Safety
/// `sigma` must point to `len` doubles; `index` and `ratio` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nlrm_detect_jump(
    sigma: *const f64,
    len: usize,
    index: *mut usize,
    ratio: *mut f64,
) -> NlrmStatus {
    guard(|| {
        if sigma.is_null() || index.is_null() || ratio.is_null() {
            return Err(Failure::null("argument"));
        }
        let report = detect_jump(std::slice::from_raw_parts(sigma, len))?;
        *index = report.jump_index;
        *ratio = report.jump_ratio;
        Ok(())
    })
}
