//! C ABI over the `berezin` library.
//!
//! Objects are opaque handles created by `*_new` functions and released with
//! the matching `*_free`. Every fallible call returns a [`BerezinStatus`]; on
//! failure the message is kept per thread and read with
//! [`berezin_last_error_message`]. Chart points are passed as `d` consecutive
//! [`BerezinComplex`] values, matrices in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use berezin::error::Error;
use berezin::functions::TestFunction;
use berezin::geometry::ChartPoint;
use berezin::hilbert::{coherent_eval, BasisSpec};
use berezin::operators::{berezin_operator, star_product, symbol_eval, OperatorMatrix};
use berezin::quadrature::QuadratureRule;
use berezin::toeplitz::{default_level, operator_norm, toeplitz_matrix};
use berezin::torus::torus_holonomy;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BerezinStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    OutOfDomain = 4,
    OddLevel = 5,
    SingularPair = 6,
    DegenerateKernel = 7,
    NumericFailure = 8,
    ResourceLimit = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BerezinComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for BerezinComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<BerezinComplex> for Complex64 {
    fn from(z: BerezinComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Orthonormal basis of the level-`m` space on `C^d`.
pub struct BerezinBasis {
    spec: Arc<BasisSpec>,
}

/// Operator on the space of a [`BerezinBasis`].
pub struct BerezinOperator {
    op: OperatorMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(e: &Error) -> BerezinStatus {
    match e {
        Error::InvalidArgument(_) | Error::IndexOutOfRange { .. } => BerezinStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => BerezinStatus::DimensionMismatch,
        Error::OutOfDomain(_) => BerezinStatus::OutOfDomain,
        Error::OddLevel(_) => BerezinStatus::OddLevel,
        Error::SingularPair { .. } => BerezinStatus::SingularPair,
        Error::DegenerateKernel(_) => BerezinStatus::DegenerateKernel,
        Error::ResourceLimit { .. } => BerezinStatus::ResourceLimit,
        _ => BerezinStatus::NumericFailure,
    }
}

struct Failure(BerezinStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BerezinStatus::NullPointer, format!("{what} is null"))
}

fn guard<F>(body: F) -> BerezinStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            BerezinStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BerezinStatus::Panic
        }
    }
}

unsafe fn point(ptr: *const BerezinComplex, d: usize, what: &str) -> Result<ChartPoint, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    let coords = std::slice::from_raw_parts(ptr, d).iter().map(|&z| z.into()).collect();
    Ok(ChartPoint::new(coords)?)
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

unsafe fn basis_ref<'a>(basis: *const BerezinBasis) -> Result<&'a BerezinBasis, Failure> {
    basis.as_ref().ok_or_else(|| null("basis"))
}

unsafe fn operator_ref<'a>(op: *const BerezinOperator) -> Result<&'a BerezinOperator, Failure> {
    op.as_ref().ok_or_else(|| null("operator"))
}

fn function(code: u32) -> Result<TestFunction, Failure> {
    TestFunction::from_code(code).ok_or_else(|| {
        Failure(
            BerezinStatus::InvalidArgument,
            format!("unknown function code {code}"),
        )
    })
}

fn boxed_operator(op: OperatorMatrix) -> *mut BerezinOperator {
    Box::into_raw(Box::new(BerezinOperator { op }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn berezin_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Copy the calling thread's last error message into `buffer` (NUL-terminated,
/// truncated to `capacity`). Returns the full message length in bytes.
///
/// # Safety
/// `buffer` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn berezin_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let message = e.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buffer.cast::<u8>(), n);
            *buffer.add(n) = 0;
        }
        bytes.len()
    })
}

/// Build the basis for `(d, m)`. `level = 0` selects the default quadrature level.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_basis_new(d: usize, m: u32, level: u32, out: *mut *mut BerezinBasis) -> BerezinStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let level = if level == 0 { QuadratureRule::level_for(m) } else { level };
        let spec = BasisSpec::build(d, m, level)?;
        *out = Box::into_raw(Box::new(BerezinBasis { spec: Arc::new(spec) }));
        Ok(())
    })
}

/// # Safety
/// `basis` must be null or a handle from [`berezin_basis_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn berezin_basis_free(basis: *mut BerezinBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Number of basis functions `N`.
///
/// # Safety
/// `basis` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_basis_len(basis: *const BerezinBasis, out: *mut usize) -> BerezinStatus {
    guard(|| write(out, basis_ref(basis)?.spec.len(), "out"))
}

/// Complex dimension `d`.
///
/// # Safety
/// `basis` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_basis_dim(basis: *const BerezinBasis, out: *mut usize) -> BerezinStatus {
    guard(|| write(out, basis_ref(basis)?.spec.dim(), "out"))
}

/// Normalization constant `c(m)`.
///
/// # Safety
/// `basis` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_basis_c_m(basis: *const BerezinBasis, out: *mut f64) -> BerezinStatus {
    guard(|| write(out, basis_ref(basis)?.spec.c_m(), "out"))
}

/// `psi_mu(nu) = (1 + conj(mu) . nu)^m`.
///
/// # Safety
/// `mu` and `nu` must each point to `d` values; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_coherent_eval(
    basis: *const BerezinBasis,
    mu: *const BerezinComplex,
    nu: *const BerezinComplex,
    out: *mut BerezinComplex,
) -> BerezinStatus {
    guard(|| {
        let spec = &basis_ref(basis)?.spec;
        let mu = point(mu, spec.dim(), "mu")?;
        let nu = point(nu, spec.dim(), "nu")?;
        write(out, coherent_eval(spec, &mu, &nu)?.into(), "out")
    })
}

/// Operator with the given `N x N` row-major entries.
///
/// # Safety
/// `entries` must point to `len` values; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_operator_from_matrix(
    basis: *const BerezinBasis,
    entries: *const BerezinComplex,
    len: usize,
    out: *mut *mut BerezinOperator,
) -> BerezinStatus {
    guard(|| {
        let spec = basis_ref(basis)?.spec.clone();
        if entries.is_null() {
            return Err(null("entries"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let n = spec.len();
        if len != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: len,
            }
            .into());
        }
        let values = std::slice::from_raw_parts(entries, len);
        let matrix = nalgebra::DMatrix::from_fn(n, n, |i, j| values[i * n + j].into());
        *out = boxed_operator(OperatorMatrix::new(spec, matrix)?);
        Ok(())
    })
}

/// Toeplitz operator of a shipped function (by code). The quadrature level is
/// raised to the Toeplitz default when the basis carries a lower one.
///
/// # Safety
/// `basis` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_toeplitz_new(
    basis: *const BerezinBasis,
    function_code: u32,
    out: *mut *mut BerezinOperator,
) -> BerezinStatus {
    guard(|| {
        let spec = basis_ref(basis)?.spec.clone();
        let f = function(function_code)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let level = default_level(spec.level());
        let spec = if spec.rule().level() >= level {
            spec
        } else {
            Arc::new(BasisSpec::build(spec.dim(), spec.level(), level)?)
        };
        *out = boxed_operator(toeplitz_matrix(spec, &f)?);
        Ok(())
    })
}

/// Operator whose covariant symbol is the shipped function (by code).
///
/// # Safety
/// `basis` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_symbol_operator_new(
    basis: *const BerezinBasis,
    function_code: u32,
    out: *mut *mut BerezinOperator,
) -> BerezinStatus {
    guard(|| {
        let spec = basis_ref(basis)?.spec.clone();
        let f = function(function_code)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = spec.dim();
        *out = boxed_operator(berezin_operator(spec, &f.sesqui(d))?);
        Ok(())
    })
}

/// # Safety
/// `op` must be null or a handle from an operator constructor not yet freed.
#[no_mangle]
pub unsafe extern "C" fn berezin_operator_free(op: *mut BerezinOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Copy the `N x N` entries in row-major order.
///
/// # Safety
/// `buffer` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn berezin_operator_entries(
    op: *const BerezinOperator,
    buffer: *mut BerezinComplex,
    len: usize,
) -> BerezinStatus {
    guard(|| {
        let entries = operator_ref(op)?.op.entries();
        let n = entries.nrows();
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        if len != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: len,
            }
            .into());
        }
        let out = std::slice::from_raw_parts_mut(buffer, len);
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = entries[(i, j)].into();
            }
        }
        Ok(())
    })
}

/// Covariant symbol `A(nu, conj(mu))`.
///
/// # Safety
/// `nu` and `mu` must each point to `d` values; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_symbol_eval(
    op: *const BerezinOperator,
    nu: *const BerezinComplex,
    mu: *const BerezinComplex,
    out: *mut BerezinComplex,
) -> BerezinStatus {
    guard(|| {
        let op = &operator_ref(op)?.op;
        let d = op.spec().dim();
        let nu = point(nu, d, "nu")?;
        let mu = point(mu, d, "mu")?;
        write(out, symbol_eval(op, &nu, &mu)?.into(), "out")
    })
}

/// Star product `(A1 * A2)(mu, conj(mu))` by quadrature.
///
/// # Safety
/// `mu` must point to `d` values; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_star_product(
    op1: *const BerezinOperator,
    op2: *const BerezinOperator,
    mu: *const BerezinComplex,
    out: *mut BerezinComplex,
) -> BerezinStatus {
    guard(|| {
        let a1 = &operator_ref(op1)?.op;
        let a2 = &operator_ref(op2)?.op;
        let mu = point(mu, a1.spec().dim(), "mu")?;
        write(out, star_product(a1, a2, &mu)?.into(), "out")
    })
}

/// Largest singular value.
///
/// # Safety
/// `op` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_operator_norm(op: *const BerezinOperator, out: *mut f64) -> BerezinStatus {
    guard(|| write(out, operator_norm(operator_ref(op)?.op.entries()), "out"))
}

/// Holonomy of the torus loop `k1 A + k2 B` at even level `m`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn berezin_torus_holonomy(k1: i64, k2: i64, m: u32, out: *mut BerezinComplex) -> BerezinStatus {
    guard(|| write(out, torus_holonomy(k1, k2, m, None)?.into(), "out"))
}
