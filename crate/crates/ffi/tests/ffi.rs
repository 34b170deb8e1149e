use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use berezin_ffi::*;

fn c(re: f64, im: f64) -> BerezinComplex {
    BerezinComplex { re, im }
}

fn new_basis(d: usize, m: u32) -> *mut BerezinBasis {
    let mut basis = ptr::null_mut();
    assert_eq!(unsafe { berezin_basis_new(d, m, 0, &mut basis) }, BerezinStatus::Ok);
    assert!(!basis.is_null());
    basis
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        berezin_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(berezin_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn basis_lifecycle() {
    let basis = new_basis(2, 16);
    let mut n = 0usize;
    let mut d = 0usize;
    let mut cm = 0.0;
    unsafe {
        assert_eq!(berezin_basis_len(basis, &mut n), BerezinStatus::Ok);
        assert_eq!(berezin_basis_dim(basis, &mut d), BerezinStatus::Ok);
        assert_eq!(berezin_basis_c_m(basis, &mut cm), BerezinStatus::Ok);
        berezin_basis_free(basis);
        berezin_basis_free(ptr::null_mut());
    }
    assert_eq!(n, 153);
    assert_eq!(d, 2);
    let expected = 17.0 * 18.0 / (2.0 * std::f64::consts::PI).powi(2);
    assert!((cm - expected).abs() < 1e-12 * expected);
}

#[test]
fn invalid_arguments_report_status_and_message() {
    let mut basis = ptr::null_mut();
    let status = unsafe { berezin_basis_new(1, 0, 0, &mut basis) };
    assert_eq!(status, BerezinStatus::InvalidArgument);
    assert!(basis.is_null());
    assert!(!last_error().is_empty());
    let status = unsafe { berezin_basis_new(1, 2, 0, ptr::null_mut()) };
    assert_eq!(status, BerezinStatus::NullPointer);
    let mut n = 0usize;
    assert_eq!(unsafe { berezin_basis_len(ptr::null(), &mut n) }, BerezinStatus::NullPointer);
    let mut out = c(0.0, 0.0);
    assert_eq!(unsafe { berezin_torus_holonomy(1, 0, 3, &mut out) }, BerezinStatus::OddLevel);
    assert!(last_error().contains("odd"));
}

#[test]
fn coherent_state_closed_form() {
    let basis = new_basis(1, 2);
    let mu = [c(0.0, 1.0)];
    let mut out = c(0.0, 0.0);
    unsafe {
        assert_eq!(berezin_coherent_eval(basis, mu.as_ptr(), mu.as_ptr(), &mut out), BerezinStatus::Ok);
        berezin_basis_free(basis);
    }
    assert!((out.re - 4.0).abs() < 1e-14 && out.im.abs() < 1e-14);
}

#[test]
fn identity_operator_symbol_and_star() {
    let basis = new_basis(1, 4);
    let n = 5;
    let entries: Vec<BerezinComplex> = (0..n * n)
        .map(|k| if k / n == k % n { c(1.0, 0.0) } else { c(0.0, 0.0) })
        .collect();
    let mut op = ptr::null_mut();
    let mu = [c(0.3, -0.2)];
    let nu = [c(-0.5, 0.1)];
    let mut sym = c(0.0, 0.0);
    let mut star = c(0.0, 0.0);
    let mut norm = 0.0;
    unsafe {
        assert_eq!(
            berezin_operator_from_matrix(basis, entries.as_ptr(), entries.len(), &mut op),
            BerezinStatus::Ok
        );
        assert_eq!(berezin_symbol_eval(op, nu.as_ptr(), mu.as_ptr(), &mut sym), BerezinStatus::Ok);
        assert_eq!(berezin_star_product(op, op, mu.as_ptr(), &mut star), BerezinStatus::Ok);
        assert_eq!(berezin_operator_norm(op, &mut norm), BerezinStatus::Ok);
        let mut bad = ptr::null_mut();
        assert_eq!(
            berezin_operator_from_matrix(basis, entries.as_ptr(), 3, &mut bad),
            BerezinStatus::DimensionMismatch
        );
        berezin_operator_free(op);
        berezin_basis_free(basis);
    }
    assert!((sym.re - 1.0).abs() < 1e-12 && sym.im.abs() < 1e-12);
    assert!((star.re - 1.0).abs() < 1e-8 && star.im.abs() < 1e-8);
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn toeplitz_and_symbol_operators_by_code() {
    let basis = new_basis(1, 4);
    let mut t = ptr::null_mut();
    let mut s = ptr::null_mut();
    let mut entries = vec![c(0.0, 0.0); 25];
    let mu = [c(0.4, 0.7)];
    let mut sym = c(0.0, 0.0);
    unsafe {
        // abs2 is code 3
        assert_eq!(berezin_toeplitz_new(basis, 3, &mut t), BerezinStatus::Ok);
        assert_eq!(berezin_operator_entries(t, entries.as_mut_ptr(), entries.len()), BerezinStatus::Ok);
        assert_eq!(berezin_symbol_operator_new(basis, 3, &mut s), BerezinStatus::Ok);
        assert_eq!(berezin_symbol_eval(s, mu.as_ptr(), mu.as_ptr(), &mut sym), BerezinStatus::Ok);
        let mut bad = ptr::null_mut();
        assert_eq!(berezin_toeplitz_new(basis, 99, &mut bad), BerezinStatus::InvalidArgument);
        berezin_operator_free(t);
        berezin_operator_free(s);
        berezin_basis_free(basis);
    }
    for q in 0..5 {
        let v = entries[q * 5 + q];
        assert!((v.re - (q as f64 + 1.0) / 6.0).abs() < 1e-8, "{q} {v:?}");
    }
    let r2 = 0.4f64 * 0.4 + 0.7 * 0.7;
    assert!((sym.re - r2 / (1.0 + r2)).abs() < 1e-12);
}

#[test]
fn holonomy_quarter_arc() {
    let mut out = c(0.0, 0.0);
    assert_eq!(unsafe { berezin_torus_holonomy(1, 0, 2, &mut out) }, BerezinStatus::Ok);
    assert!(out.re.abs() < 1e-14 && (out.im + 1.0).abs() < 1e-14);
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/berezin.h")).unwrap();
    for name in [
        "berezin_version",
        "berezin_last_error_message",
        "berezin_basis_new",
        "berezin_basis_free",
        "berezin_basis_len",
        "berezin_basis_dim",
        "berezin_basis_c_m",
        "berezin_coherent_eval",
        "berezin_operator_from_matrix",
        "berezin_toeplitz_new",
        "berezin_symbol_operator_new",
        "berezin_operator_free",
        "berezin_operator_entries",
        "berezin_symbol_eval",
        "berezin_star_product",
        "berezin_operator_norm",
        "berezin_torus_holonomy",
        "BEREZIN_STATUS_OK",
        "typedef struct BerezinBasis BerezinBasis",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let lib = target_dir().join("libberezin_ffi.a");
    let compiler = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&compiler).arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "berezin.h"
int main(void) {
    BerezinBasis *basis = NULL;
    if (berezin_basis_new(1, 2, 0, &basis) != BEREZIN_STATUS_OK) return 1;
    size_t n = 0;
    berezin_basis_len(basis, &n);
    BerezinComplex mu = {0.0, 1.0}, out = {0.0, 0.0};
    berezin_coherent_eval(basis, &mu, &mu, &out);
    berezin_basis_free(basis);
    if (berezin_basis_new(1, 0, 0, &basis) != BEREZIN_STATUS_INVALID_ARGUMENT) return 2;
    printf("%zu %.3f\n", n, out.re);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&compiler)
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let output = Command::new(&exe).output().unwrap();
    assert!(output.status.success());
    assert_eq!(String::from_utf8_lossy(&output.stdout).trim(), "3 4.000");
}
