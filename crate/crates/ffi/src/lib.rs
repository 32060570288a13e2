//! C interface to the translator. Programs live behind an opaque handle;
//! every call returns a `TocStatus` and the message of the last failure on
//! the calling thread is available from `toc_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use toc_core::ast::Program;
use toc_core::check::{check_program, CheckOptions};
use toc_core::emit::{emit_smtlib, EmitOptions};
use toc_core::oracle::stable_models;
use toc_core::parser::parse_str;
use toc_core::toc::{toc_program, TocOptions};
use toc_core::Error;

/// Result codes shared by every function of the interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TocStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Unsupported = 4,
    Resource = 5,
    Mismatch = 6,
    Internal = 7,
}

/// A parsed ground program.
pub struct TocProgram {
    program: Program,
}

/// Encoding switches for `toc_translate` and `toc_check`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TocEncoding {
    pub no_strong: bool,
    pub vub_form: bool,
    pub extensional: bool,
}

impl From<TocEncoding> for TocOptions {
    fn from(e: TocEncoding) -> Self {
        TocOptions { no_strong: e.no_strong, vub_form: e.vub_form, extensional: e.extensional }
    }
}

/// Model counts reported by `toc_check`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TocCheckSummary {
    pub stable_models: usize,
    pub translation_models: usize,
    pub passed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> TocStatus {
    match e {
        Error::Syntax { .. } | Error::Weight { .. } | Error::UnknownAtom(_) => TocStatus::Parse,
        Error::Unsupported { .. } | Error::NotConvex(_) => TocStatus::Unsupported,
        Error::Resource { .. } => TocStatus::Resource,
        _ => TocStatus::Internal,
    }
}

/// Runs `f`, recording its error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (TocStatus, String)>) -> TocStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TocStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TocStatus::Internal
        }
    }
}

fn fail(e: Error) -> (TocStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TocStatus, String) {
    (TocStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn program<'a>(handle: *const TocProgram) -> Result<&'a Program, (TocStatus, String)> {
    handle.as_ref().map(|h| &h.program).ok_or_else(|| null("program"))
}

/// Parses a NUL-terminated program text. On success `*out` owns a new
/// handle that must be released with `toc_program_free`.
///
/// # Safety
/// `text` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn toc_parse(text: *const c_char, out: *mut *mut TocProgram) -> TocStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| (TocStatus::InvalidUtf8, format!("program text is not UTF-8: {e}")))?;
        let program = parse_str(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(TocProgram { program }));
        Ok(())
    })
}

/// Releases a handle from `toc_parse`. Null is ignored.
///
/// # Safety
/// `handle` must come from `toc_parse` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn toc_program_free(handle: *mut TocProgram) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of atoms in the program's signature, hidden ones included.
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn toc_atom_count(handle: *const TocProgram, out: *mut usize) -> TocStatus {
    guard(|| {
        let p = program(handle)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = p.signature.len();
        Ok(())
    })
}

/// Writes the SMT-LIB translation to `*out`, a string to be released with
/// `toc_string_free`.
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn toc_translate(
    handle: *const TocProgram,
    encoding: TocEncoding,
    get_model: bool,
    out: *mut *mut c_char,
) -> TocStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = program(handle)?;
        let fs = toc_program(p, encoding.into());
        let text = emit_smtlib(&fs, EmitOptions { model: get_model }).map_err(fail)?;
        let text = CString::new(text).map_err(|_| (TocStatus::Internal, "script contains NUL".to_string()))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn toc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Counts the stable models with the reference interpreter.
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn toc_stable_model_count(handle: *const TocProgram, out: *mut usize) -> TocStatus {
    guard(|| {
        let p = program(handle)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = stable_models(p).map_err(fail)?.len();
        Ok(())
    })
}

/// Compares the translation's models with the stable models. Returns
/// `Mismatch` when they disagree; the summary is filled in either way.
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn toc_check(
    handle: *const TocProgram,
    encoding: TocEncoding,
    out: *mut TocCheckSummary,
) -> TocStatus {
    guard(|| {
        let p = program(handle)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = check_program(p, CheckOptions { toc: encoding.into(), ..Default::default() }).map_err(fail)?;
        *out = TocCheckSummary { stable_models: r.stable_models, translation_models: r.toc_models, passed: r.passed() };
        if r.passed() {
            Ok(())
        } else {
            Err((TocStatus::Mismatch, r.failures.join("; ")))
        }
    })
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn toc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
