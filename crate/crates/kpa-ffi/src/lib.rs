//! C ABI for the permutation-array library.
//!
//! Conventions: every fallible call returns a `KpaStatus`; results come
//! back through out-parameters. Handles are opaque and must be released
//! with the matching `_free` call. Strings returned by the library are
//! NUL-terminated, UTF-8, and owned by the caller via `kpa_string_free`.
//! On any non-Ok status a thread-local message is readable through
//! `kpa_last_error_message` until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use kpa::perm::Permutation;
use kpa::search::{best_of_restarts, SearchSpace, DEFAULT_SEED_SCHEDULE};
use kpa::verifier::min_pairwise_distance;
use kpa::{Error, PermArray};

/// Status codes for every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum KpaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ParseError = 3,
    GuardTripped = 4,
    IoError = 5,
    Panic = 6,
}

/// Opaque permutation-array handle.
pub struct KpaArray {
    inner: PermArray,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn status_of(e: &Error) -> KpaStatus {
    match e {
        Error::Parse { .. } => KpaStatus::ParseError,
        Error::Guard(_) => KpaStatus::GuardTripped,
        Error::Io(_) => KpaStatus::IoError,
        _ => KpaStatus::InvalidArgument,
    }
}

fn guarded(f: impl FnOnce() -> KpaStatus) -> KpaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            KpaStatus::Panic
        }
    }
}

fn fail(e: Error) -> KpaStatus {
    let s = status_of(&e);
    set_error(&e.to_string());
    s
}

/// Message for the most recent error on this thread. Borrowed; valid
/// until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn kpa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string; never freed.
#[no_mangle]
pub extern "C" fn kpa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Kendall tau distance between two length-`n` permutations of 0..n-1.
///
/// # Safety
/// `sigma` and `pi` must point to `n` readable bytes; `out` must be a
/// valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn kpa_kendall_distance(
    sigma: *const u8,
    pi: *const u8,
    n: usize,
    out: *mut u32,
) -> KpaStatus {
    if sigma.is_null() || pi.is_null() || out.is_null() {
        set_error("null argument");
        return KpaStatus::NullArgument;
    }
    let s = std::slice::from_raw_parts(sigma, n).to_vec();
    let p = std::slice::from_raw_parts(pi, n).to_vec();
    guarded(|| {
        let s = match Permutation::new(s) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        let p = match Permutation::new(p) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        match kpa::kendall_distance(&s, &p) {
            Ok(d) => {
                unsafe { *out = d };
                KpaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses an array from its text form (same format the CLI reads).
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpa_array_parse(text: *const c_char, out: *mut *mut KpaArray) -> KpaStatus {
    if text.is_null() || out.is_null() {
        set_error("null argument");
        return KpaStatus::NullArgument;
    }
    let text = match CStr::from_ptr(text).to_str() {
        Ok(t) => t.to_owned(),
        Err(_) => {
            set_error("text is not valid UTF-8");
            return KpaStatus::ParseError;
        }
    };
    guarded(|| match kpa::io::parse_array(&text) {
        Ok(arr) => {
            unsafe { *out = Box::into_raw(Box::new(KpaArray { inner: arr })) };
            KpaStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Releases an array handle. Null is accepted and ignored.
///
/// # Safety
/// `arr` must be a pointer previously returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn kpa_array_free(arr: *mut KpaArray) {
    if !arr.is_null() {
        drop(Box::from_raw(arr));
    }
}

/// Number of members.
///
/// # Safety
/// `arr` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn kpa_array_len(arr: *const KpaArray) -> usize {
    if arr.is_null() {
        return 0;
    }
    (*arr).inner.len()
}

/// Symbol count n of the members.
///
/// # Safety
/// `arr` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn kpa_array_n(arr: *const KpaArray) -> usize {
    if arr.is_null() {
        return 0;
    }
    (*arr).inner.n()
}

/// Exact minimum pairwise distance, with an optional witness pair.
/// Witness out-parameters may be null when not wanted.
///
/// # Safety
/// `arr` must be a valid handle; non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpa_array_min_distance(
    arr: *const KpaArray,
    out_distance: *mut u32,
    out_witness_i: *mut usize,
    out_witness_j: *mut usize,
) -> KpaStatus {
    if arr.is_null() || out_distance.is_null() {
        set_error("null argument");
        return KpaStatus::NullArgument;
    }
    let arr = &*arr;
    guarded(|| match min_pairwise_distance(&arr.inner) {
        Ok(report) => {
            unsafe { *out_distance = report.min_distance };
            if let Some((i, j)) = report.witness_pair {
                if !out_witness_i.is_null() {
                    unsafe { *out_witness_i = i };
                }
                if !out_witness_j.is_null() {
                    unsafe { *out_witness_j = j };
                }
            }
            KpaStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Certifies the array at distance `d`; `*out_pass` is 1 on pass, 0 on
/// fail. A failing certificate is still `Ok` status.
///
/// # Safety
/// `arr` must be a valid handle; `out_pass` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpa_array_certify(
    arr: *const KpaArray,
    d: u32,
    out_pass: *mut i32,
) -> KpaStatus {
    if arr.is_null() || out_pass.is_null() {
        set_error("null argument");
        return KpaStatus::NullArgument;
    }
    let arr = &*arr;
    guarded(|| match kpa::certify(&arr.inner, d) {
        Ok(report) => {
            unsafe { *out_pass = report.passes(d) as i32 };
            KpaStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Renders the array in its text form.
///
/// # Safety
/// `arr` must be a valid handle; `out` must be writable. Free the result
/// with `kpa_string_free`.
#[no_mangle]
pub unsafe extern "C" fn kpa_array_format(arr: *const KpaArray, out: *mut *mut c_char) -> KpaStatus {
    if arr.is_null() || out.is_null() {
        set_error("null argument");
        return KpaStatus::NullArgument;
    }
    let arr = &*arr;
    guarded(|| {
        let text = kpa::io::format_array(&arr.inner, &[]);
        match CString::new(text) {
            Ok(s) => {
                unsafe { *out = s.into_raw() };
                KpaStatus::Ok
            }
            Err(_) => {
                set_error("array text contains NUL");
                KpaStatus::InvalidArgument
            }
        }
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be a string previously returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn kpa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Randomized greedy search with restarts over the full space (`m` = 0)
/// or over S_{n,m}. Deterministic for a given seed.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpa_search_greedy(
    n: usize,
    m: usize,
    d: u32,
    restarts: usize,
    rng_seed: u64,
    out: *mut *mut KpaArray,
) -> KpaStatus {
    if out.is_null() {
        set_error("null argument");
        return KpaStatus::NullArgument;
    }
    guarded(|| {
        let space = if m == 0 {
            Ok(SearchSpace::full(n))
        } else {
            SearchSpace::restricted(n, m)
        };
        let space = match space {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        match best_of_restarts(&space, d, restarts.max(1), rng_seed, DEFAULT_SEED_SCHEDULE) {
            Ok(arr) => {
                unsafe { *out = Box::into_raw(Box::new(KpaArray { inner: arr })) };
                KpaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
