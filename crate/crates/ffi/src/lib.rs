//! C ABI over `isospec-core`.
//!
//! Objects cross the boundary as opaque handles created by `iso_*_new`
//! functions and released with the matching `iso_*_free`. Every fallible
//! call returns an [`IsoStatus`]; the message for the most recent failure on
//! the calling thread is available through [`iso_last_error_message`].
//! Panics are caught at the boundary and reported as [`IsoStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use isospec::euclid::{IntertwinerParams, ParamsError};
use isospec::expr::{parse, Expr, ExprError};
use isospec::field::FieldError;
use isospec::integrability::{check_pfaffian_conditions, preset_table1};
use isospec::numerics::{intertwining_convergence, partner_spectrum_check, Grid1D, NumericsError};
use isospec::potentials::{build_2d_pair, build_general_pair, PotentialError, PotentialPair};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ParseError = 3,
    NotIntegrable = 4,
    Singular = 5,
    NumericalFailure = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Intertwiner parameters `(n, a, c)`.
pub struct IsoParams(IntertwinerParams);

/// An intertwined pair `(V0, V1)` with its operator.
pub struct IsoPair(PotentialPair);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

struct Failure(IsoStatus, String);

impl Failure {
    fn invalid(msg: impl Into<String>) -> Self {
        Failure(IsoStatus::InvalidArgument, msg.into())
    }
}

impl From<ExprError> for Failure {
    fn from(e: ExprError) -> Self {
        Failure(IsoStatus::ParseError, e.to_string())
    }
}

impl From<ParamsError> for Failure {
    fn from(e: ParamsError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<FieldError> for Failure {
    fn from(e: FieldError) -> Self {
        let status = match e {
            FieldError::Singular { .. } | FieldError::NonFinite { .. } => IsoStatus::Singular,
            FieldError::Expr(_) => IsoStatus::ParseError,
            _ => IsoStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<PotentialError> for Failure {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::NotIntegrable(_) => Failure(IsoStatus::NotIntegrable, e.to_string()),
            PotentialError::Expr(_) => Failure(IsoStatus::ParseError, e.to_string()),
            PotentialError::Field(f) => f.into(),
            other => Failure::invalid(other.to_string()),
        }
    }
}

impl From<NumericsError> for Failure {
    fn from(e: NumericsError) -> Self {
        let status = match e {
            NumericsError::Invalid(_) => IsoStatus::InvalidArgument,
            NumericsError::Expr(_) => IsoStatus::ParseError,
            NumericsError::SingularNode { .. } | NumericsError::SingularRegion(_) => IsoStatus::Singular,
            _ => IsoStatus::NumericalFailure,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `body`, converting errors and panics into a status code.
fn guarded(body: impl FnOnce() -> Result<(), Failure>) -> IsoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => IsoStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            IsoStatus::Panic
        }
    }
}

fn nonnull<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(IsoStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    nonnull(s, what)?;
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    nonnull(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, v: T) {
    if !out.is_null() {
        *out = v;
    }
}

fn boxed<T>(out: *mut *mut T, v: T) {
    unsafe { *out = Box::into_raw(Box::new(v)) };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn iso_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes, without the terminator, of the last error message on
/// this thread; 0 if there is none.
#[no_mangle]
pub extern "C" fn iso_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes().len()))
}

/// Copies the last error message into `buf` including the terminator.
/// Returns `BufferTooSmall` (writing nothing) if `len` cannot hold it.
///
/// # Safety
/// `buf` must be valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn iso_last_error_message(buf: *mut c_char, len: usize) -> IsoStatus {
    if buf.is_null() {
        return IsoStatus::NullArgument;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&b"\0"[..], |s| s.as_bytes_with_nul());
        if bytes.len() > len {
            return IsoStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
        IsoStatus::Ok
    })
}

/// Parameters from `a` (length `n`) and `c` (`n*n`, row-major, antisymmetric).
///
/// # Safety
/// `a` and `c` must point to `n` and `n*n` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn iso_params_new(n: usize, a: *const f64, c: *const f64, out: *mut *mut IsoParams) -> IsoStatus {
    guarded(|| {
        nonnull(out, "out")?;
        let a = read_slice(a, n, "a")?.to_vec();
        let c = read_slice(c, n * n, "c")?;
        let rows = c.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        boxed(out, IsoParams(IntertwinerParams::new(n, a, rows)?));
        Ok(())
    })
}

/// One of the ten `n = 3` presets, `row` in 1..=10.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iso_params_preset(row: usize, out: *mut *mut IsoParams) -> IsoStatus {
    guarded(|| {
        nonnull(out, "out")?;
        let p = preset_table1(row).map_err(|e| Failure::invalid(e.to_string()))?;
        boxed(out, IsoParams(p.params));
        Ok(())
    })
}

/// Dimension of `params`, or 0 for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iso_params_dimension(params: *const IsoParams) -> usize {
    params.as_ref().map_or(0, |p| p.0.n())
}

/// Integrability check. `free_parameters` receives the parameter count left
/// by the constraints, or -1 where the analysis does not provide one.
///
/// # Safety
/// `params` must be a live handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn iso_params_check(
    params: *const IsoParams,
    satisfied: *mut bool,
    free_parameters: *mut i64,
) -> IsoStatus {
    guarded(|| {
        nonnull(params, "params")?;
        let r = check_pfaffian_conditions(&(*params).0);
        write(satisfied, r.all_satisfied);
        write(free_parameters, r.free_parameters.map_or(-1, |v| v as i64));
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iso_params_free(params: *mut IsoParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Planar pair: `f` is an expression in `eta`, `h` in `kappa`.
///
/// # Safety
/// `f` and `h` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iso_pair_new_2d(
    a1: f64,
    a2: f64,
    c: f64,
    f: *const c_char,
    h: *const c_char,
    out: *mut *mut IsoPair,
) -> IsoStatus {
    guarded(|| {
        nonnull(out, "out")?;
        let f = parse(read_str(f, "f")?, &["eta"])?;
        let h = parse(read_str(h, "h")?, &["kappa"])?;
        boxed(out, IsoPair(build_2d_pair(a1, a2, c, &f, &h)?));
        Ok(())
    })
}

/// Pair in any dimension with `eta = L_i / L_j` (0-based). `f` is an
/// expression in `eta`; `h` may use `x1..xn` and `Lsq`.
///
/// # Safety
/// `params` must be a live handle, `f` and `h` NUL-terminated strings and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iso_pair_new_general(
    params: *const IsoParams,
    i: usize,
    j: usize,
    f: *const c_char,
    h: *const c_char,
    out: *mut *mut IsoPair,
) -> IsoStatus {
    guarded(|| {
        nonnull(params, "params")?;
        nonnull(out, "out")?;
        let p = &(*params).0;
        let mut names: Vec<String> = (1..=p.n()).map(|k| format!("x{k}")).collect();
        names.push("Lsq".into());
        let vars: Vec<&str> = names.iter().map(String::as_str).collect();
        let f = parse(read_str(f, "f")?, &["eta"])?;
        let h: Expr = parse(read_str(h, "h")?, &vars)?;
        boxed(out, IsoPair(build_general_pair(p, (i, j), &f, &h)?));
        Ok(())
    })
}

/// Dimension of `pair`, or 0 for a null handle.
///
/// # Safety
/// `pair` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iso_pair_dimension(pair: *const IsoPair) -> usize {
    pair.as_ref().map_or(0, |p| p.0.n())
}

/// `V0`, `V1` and `L0` at `x`. Returns `Singular` on a singular locus.
///
/// # Safety
/// `pair` must be a live handle and `x` must hold `len` doubles; outputs may
/// be null.
#[no_mangle]
pub unsafe extern "C" fn iso_pair_eval(
    pair: *const IsoPair,
    x: *const f64,
    len: usize,
    v0: *mut f64,
    v1: *mut f64,
    l0: *mut f64,
) -> IsoStatus {
    guarded(|| {
        nonnull(pair, "pair")?;
        let p = &(*pair).0;
        let x = read_slice(x, len, "x")?;
        let vals = (p.v0.eval(x)?, p.v1.eval(x)?, p.l0.eval(x)?);
        write(v0, vals.0);
        write(v1, vals.1);
        write(l0, vals.2);
        Ok(())
    })
}

/// Largest scaled residual of the consistency identities at `x`.
///
/// # Safety
/// `pair` must be a live handle, `x` must hold `len` doubles and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn iso_pair_identity_residual(
    pair: *const IsoPair,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> IsoStatus {
    guarded(|| {
        nonnull(pair, "pair")?;
        nonnull(out, "out")?;
        let p = &(*pair).0;
        let x = read_slice(x, len, "x")?;
        if x.len() != p.n() {
            return Err(Failure::invalid(format!("expected a point of dimension {}, got {}", p.n(), x.len())));
        }
        if let Some(locus) = p.singular_at(x) {
            return Err(Failure(IsoStatus::Singular, format!("{x:?} is on a singular locus ({locus})")));
        }
        *out = p.checker()?.residuals_at(x)?.max();
        Ok(())
    })
}

/// Observed order of the finite-difference intertwining residual on a
/// Gaussian of width `sigma` in the cube of half-width `width` around
/// `center`, over the given cell counts.
///
/// # Safety
/// `pair` must be a live handle, `center` must hold `len` doubles, `cells`
/// `ncells` entries, and `order` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iso_pair_convergence_order(
    pair: *const IsoPair,
    center: *const f64,
    len: usize,
    sigma: f64,
    width: f64,
    cells: *const usize,
    ncells: usize,
    order: *mut f64,
) -> IsoStatus {
    guarded(|| {
        nonnull(pair, "pair")?;
        nonnull(order, "order")?;
        let center = read_slice(center, len, "center")?;
        if ncells < 2 {
            return Err(Failure::invalid("need at least two grids"));
        }
        nonnull(cells, "cells")?;
        let cells = std::slice::from_raw_parts(cells, ncells);
        *order = intertwining_convergence(&(*pair).0, center, sigma, width, cells)?.order;
        Ok(())
    })
}

/// # Safety
/// `pair` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iso_pair_free(pair: *mut IsoPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Lowest `k` eigenvalues of `H∓ = −d²/dξ² + f² ∓ f'` for a superpotential
/// `f(xi)` on `nodes` points of `[lo, hi]`. `max_deviation` receives the
/// worst mismatch of the expected pairing.
///
/// # Safety
/// `f` must be a NUL-terminated string; `minus` and `plus` must be writable
/// for `k` doubles; `max_deviation` may be null.
#[no_mangle]
pub unsafe extern "C" fn iso_partner_spectrum(
    f: *const c_char,
    lo: f64,
    hi: f64,
    nodes: usize,
    k: usize,
    minus: *mut f64,
    plus: *mut f64,
    max_deviation: *mut f64,
) -> IsoStatus {
    guarded(|| {
        nonnull(minus, "minus")?;
        nonnull(plus, "plus")?;
        let f = parse(read_str(f, "f")?, &["xi"])?;
        let grid = Grid1D::new(lo, hi, nodes)?;
        let r = partner_spectrum_check(&f, "xi", &grid, k)?;
        for (dst, src) in [(minus, &r.minus.eigenvalues), (plus, &r.plus.eigenvalues)] {
            if src.len() < k {
                return Err(Failure(IsoStatus::NumericalFailure, format!("only {} eigenvalues found", src.len())));
            }
            ptr::copy_nonoverlapping(src.as_ptr(), dst, k);
        }
        write(max_deviation, r.max_deviation);
        Ok(())
    })
}
