use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use toc_ffi::*;

fn parse(text: &str) -> *mut TocProgram {
    let text = CString::new(text).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { toc_parse(text.as_ptr(), &mut handle) }, TocStatus::Ok);
    assert!(!handle.is_null());
    handle
}

fn last_error() -> String {
    let p = toc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn parse_count_and_free() {
    let h = parse("{b1}. {b2}. a :- 1 <= { b1, b2 }.");
    let mut n = 0;
    assert_eq!(unsafe { toc_atom_count(h, &mut n) }, TocStatus::Ok);
    assert_eq!(n, 3);
    assert_eq!(unsafe { toc_stable_model_count(h, &mut n) }, TocStatus::Ok);
    assert_eq!(n, 4);
    unsafe { toc_program_free(h) };
}

#[test]
fn translate_returns_an_owned_script() {
    let h = parse("a :- a.");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { toc_translate(h, TocEncoding::default(), true, &mut out) }, TocStatus::Ok);
    let script = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    assert!(script.starts_with("(set-logic QF_LIA)") || script.contains("(set-logic QF_LIA)"));
    assert!(script.trim_end().ends_with("(get-model)"));
    unsafe {
        toc_string_free(out);
        toc_program_free(h);
    }
}

#[test]
fn check_fills_the_summary() {
    let h = parse("a :- 2 <= { b1, b2, b3 }. {b1}. {b2}. b3 :- a.");
    let mut s = TocCheckSummary::default();
    assert_eq!(unsafe { toc_check(h, TocEncoding::default(), &mut s) }, TocStatus::Ok);
    assert!(s.passed);
    assert_eq!(s.stable_models, s.translation_models);

    // dropping the strong constraints admits spurious level assignments
    let weak = TocEncoding { no_strong: true, ..Default::default() };
    let h2 = parse("a :- 2 <= { b1, b2, b3, b4 }. {b3}. b3 :- a. b1 :- b3. b4 :- b3. b2 :- a, not b1.");
    assert_eq!(unsafe { toc_check(h2, weak, &mut s) }, TocStatus::Mismatch);
    assert!(!s.passed);
    assert!(!last_error().is_empty());
    unsafe {
        toc_program_free(h);
        toc_program_free(h2);
    }
}

#[test]
fn errors_are_reported() {
    let text = CString::new("a :- .").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { toc_parse(text.as_ptr(), &mut h) }, TocStatus::Parse);
    assert!(h.is_null());
    assert!(last_error().contains("syntax error"));

    assert_eq!(unsafe { toc_parse(ptr::null(), &mut h) }, TocStatus::NullArgument);
    assert_eq!(unsafe { toc_parse(text.as_ptr(), ptr::null_mut()) }, TocStatus::NullArgument);
    let mut n = 0;
    assert_eq!(unsafe { toc_atom_count(ptr::null(), &mut n) }, TocStatus::NullArgument);

    let bad = [0xffu8, 0];
    assert_eq!(unsafe { toc_parse(bad.as_ptr().cast(), &mut h) }, TocStatus::InvalidUtf8);

    unsafe {
        toc_program_free(ptr::null_mut());
        toc_string_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/toc.h");
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
