//! C ABI over `robvario`.
//!
//! Every fallible function returns an [`RvStatus`]; on failure a message is
//! available from [`rv_last_error_message`] on the same thread. Handles are
//! opaque, created by `*_new`/`*_fit`/`*_load` functions and released with
//! the matching `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use robvario::app::{load_asc, save_asc};
use robvario::breakdown::{breakdown_point, BreakdownEstimator, BreakdownQuery, Scenario};
use robvario::estimators::{estimate_variogram, EstimatorConfig, EstimatorId};
use robvario::grid::{Direction, Grid, LagSet, VectorSample};
use robvario::mcd::{fast_mcd, reweight_mcd, McdConfig, McdFit};
use robvario::numerics::{chisq_cdf, chisq_quantile, RngStream};
use robvario::scale::{qn, QnConfig};
use robvario::simfield::{simulate_field, FieldSpec};
use robvario::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    BufferTooSmall = 5,
    NotUsable = 6,
    Numerical = 7,
    Panic = 99,
}

/// A grid of `nx * ny` cells, `x` fastest, row 0 southernmost.
pub struct RvGrid(Grid);

/// A raw or reweighted MCD fit.
pub struct RvMcdFit(McdFit);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain(_) | Error::Invalid(_) | Error::DimensionMismatch { .. } | Error::UnknownEstimator(_) => {
                RvStatus::InvalidArgument
            }
            Error::Parse { .. } | Error::MalformedHeader(_) | Error::CellCountMismatch { .. } => RvStatus::Parse,
            Error::Io(_) => RvStatus::Io,
            Error::NotUsable(_) | Error::NoValidPartition { .. } => RvStatus::NotUsable,
            _ => RvStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: RvStatus, msg: &str) -> Failure {
    Failure(status, msg.to_string())
}

fn set_error(msg: Option<String>) {
    let c = msg.map(|m| CString::new(m.replace('\0', " ")).expect("NULs removed"));
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(None);
            RvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(Some(msg));
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(Some(format!("internal panic: {msg}")));
            RvStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(RvStatus::NullPointer, &format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(RvStatus::InvalidArgument, &format!("`{name}` is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(RvStatus::NullPointer, &format!("`{name}` is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(RvStatus::NullPointer, &format!("`{name}` is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(RvStatus::NullPointer, &format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, need: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len < need {
        return Err(fail(RvStatus::BufferTooSmall, &format!("`{name}` holds {len}, need {need}")));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(RvStatus::NullPointer, &format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

fn parsed<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(Failure::from)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a
/// successful one. Valid until the next call into the library.
#[no_mangle]
pub extern "C" fn rv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a grid from `nx * ny` values. `mask` may be NULL; a nonzero mask
/// byte marks a missing cell.
///
/// # Safety
/// `values` (and `mask` if non-NULL) must point to `nx * ny` elements.
#[no_mangle]
pub unsafe extern "C" fn rv_grid_new(
    nx: usize,
    ny: usize,
    values: *const f64,
    mask: *const u8,
    out: *mut *mut RvGrid,
) -> RvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let n = nx.checked_mul(ny).ok_or_else(|| fail(RvStatus::InvalidArgument, "grid size overflows"))?;
        let v = slice_arg(values, n, "values")?.to_vec();
        let g = if mask.is_null() {
            Grid::new(nx, ny, v)?
        } else {
            let m = slice_arg(mask, n, "mask")?.iter().map(|&b| b != 0).collect();
            Grid::with_mask(nx, ny, v, m)?
        };
        *out = Box::into_raw(Box::new(RvGrid(g)));
        Ok(())
    })
}

/// Releases a grid; NULL is ignored.
///
/// # Safety
/// `grid` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rv_grid_free(grid: *mut RvGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` must be a live handle; `nx` and `ny` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_grid_dims(grid: *const RvGrid, nx: *mut usize, ny: *mut usize) -> RvStatus {
    guard(|| {
        let g = &ref_arg(grid, "grid")?.0;
        *out_arg(nx, "nx")? = g.nx();
        *out_arg(ny, "ny")? = g.ny();
        Ok(())
    })
}

/// Copies cell values (masked cells as NaN) and, if `mask` is non-NULL, the
/// mask into buffers of at least `len` elements.
///
/// # Safety
/// `values` (and `mask` if non-NULL) must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn rv_grid_values(grid: *const RvGrid, values: *mut f64, mask: *mut u8, len: usize) -> RvStatus {
    guard(|| {
        let g = &ref_arg(grid, "grid")?.0;
        let v = slice_out(values, len, g.len(), "values")?;
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = if g.is_masked(i) { f64::NAN } else { g.values()[i] };
        }
        if !mask.is_null() {
            let m = slice_out(mask, len, g.len(), "mask")?;
            for (slot, &b) in m.iter_mut().zip(g.mask()) {
                *slot = u8::from(b);
            }
        }
        Ok(())
    })
}

/// Reads an ESRI ASCII grid; nodata cells become masked.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_grid_load_asc(path: *const c_char, out: *mut *mut RvGrid) -> RvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = load_asc(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(RvGrid(g)));
        Ok(())
    })
}

/// # Safety
/// `grid` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rv_grid_save_asc(grid: *const RvGrid, path: *const c_char) -> RvStatus {
    guard(|| {
        let g = &ref_arg(grid, "grid")?.0;
        save_asc(str_arg(path, "path")?, g)?;
        Ok(())
    })
}

/// Simulates a zero-mean Gaussian field. `model` is
/// `family:range:sill[:theta:ratio]`, e.g. `spherical:5:2:3pi/8:2`.
///
/// # Safety
/// `model` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_simulate_field(
    model: *const c_char,
    nx: usize,
    ny: usize,
    seed: u64,
    out: *mut *mut RvGrid,
) -> RvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = FieldSpec::new(parsed(str_arg(model, "model")?)?, nx, ny);
        let g = simulate_field(&spec, &mut RngStream::new(seed, 0))?;
        *out = Box::into_raw(Box::new(RvGrid(g)));
        Ok(())
    })
}

/// Estimates `2γ(h_1..h_{h_max})` along one direction (`ew`, `sn`, `swne`,
/// `senw`) with one estimator (`matheron`, `genton`, `mcd.org.re`, ...).
/// `counts` may be NULL. Both buffers need at least `h_max` elements.
///
/// # Safety
/// Strings must be NUL-terminated; buffers must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn rv_estimate_variogram(
    grid: *const RvGrid,
    estimator: *const c_char,
    direction: *const c_char,
    h_max: usize,
    seed: u64,
    values: *mut f64,
    counts: *mut usize,
    len: usize,
) -> RvStatus {
    guard(|| {
        let g = &ref_arg(grid, "grid")?.0;
        let id: EstimatorId = parsed(str_arg(estimator, "estimator")?)?;
        let dir: Direction = parsed(str_arg(direction, "direction")?)?;
        let out = slice_out(values, len, h_max, "values")?;
        let lags = LagSet::new(dir, h_max)?;
        let est = estimate_variogram(g, &lags, id, &EstimatorConfig::default(), &mut RngStream::new(seed, 0))?;
        out.copy_from_slice(&est.values);
        if !counts.is_null() {
            slice_out(counts, len, h_max, "counts")?.copy_from_slice(&est.counts);
        }
        Ok(())
    })
}

/// Exact breakdown point `numerator / denominator` on a line of `n_x`
/// observations. `scenario` is `block` or `isolated`; `estimator` one of
/// `mcd.org`, `mcd.diff`, `mcd.org.mod`, `mcd.diff.mod`, `genton`.
///
/// # Safety
/// Strings must be NUL-terminated; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_breakdown_point(
    scenario: *const c_char,
    estimator: *const c_char,
    n_x: u64,
    h_max: u64,
    m: u64,
    numerator: *mut u64,
    denominator: *mut u64,
) -> RvStatus {
    guard(|| {
        let s: Scenario = parsed(str_arg(scenario, "scenario")?)?;
        let e: BreakdownEstimator = parsed(str_arg(estimator, "estimator")?)?;
        let q = BreakdownQuery::new(s, e, n_x, h_max, m);
        q.validate()?;
        let r = breakdown_point(&q)?;
        *out_arg(numerator, "numerator")? = *r.numer();
        *out_arg(denominator, "denominator")? = *r.denom();
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_chisq_cdf(x: f64, df: f64, out: *mut f64) -> RvStatus {
    guard(|| {
        *out_arg(out, "out")? = chisq_cdf(x, df)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_chisq_quantile(p: f64, df: f64, out: *mut f64) -> RvStatus {
    guard(|| {
        *out_arg(out, "out")? = chisq_quantile(p, df)?;
        Ok(())
    })
}

/// Qn scale of `n` values with the normal consistency factor; a nonzero
/// `finite_sample` also applies the small-sample factor.
///
/// # Safety
/// `x` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_qn(x: *const f64, n: usize, finite_sample: i32, out: *mut f64) -> RvStatus {
    guard(|| {
        let cfg = QnConfig { finite_sample_correction: finite_sample != 0, ..QnConfig::default() };
        *out_arg(out, "out")? = qn(slice_arg(x, n, "x")?, &cfg)?;
        Ok(())
    })
}

/// FAST-MCD on `n` row-major rows of dimension `p`. `alpha` in `[0.5, 1]`
/// sets the subset fraction; pass 0 for `⌊(n+p+1)/2⌋`. A nonzero `reweight`
/// returns the one-step reweighted fit.
///
/// # Safety
/// `data` must hold `n * p` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_mcd_fit(
    data: *const f64,
    n: usize,
    p: usize,
    alpha: f64,
    reweight: i32,
    seed: u64,
    out: *mut *mut RvMcdFit,
) -> RvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let len = n.checked_mul(p).ok_or_else(|| fail(RvStatus::InvalidArgument, "data size overflows"))?;
        let x = slice_arg(data, len, "data")?.to_vec();
        let sample = VectorSample::from_rows(p, x, vec![(0, 0); n])?;
        let cfg = McdConfig { alpha: (alpha != 0.0).then_some(alpha), ..McdConfig::default() };
        let mut fit = fast_mcd(&sample, &cfg, &mut RngStream::new(seed, 0))?;
        if reweight != 0 {
            fit = reweight_mcd(&sample, &fit, &cfg)?;
        }
        *out = Box::into_raw(Box::new(RvMcdFit(fit)));
        Ok(())
    })
}

/// Releases a fit; NULL is ignored.
///
/// # Safety
/// `fit` must come from [`rv_mcd_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rv_mcd_free(fit: *mut RvMcdFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Dimension `p` of a fit, or 0 for NULL.
///
/// # Safety
/// `fit` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rv_mcd_dim(fit: *const RvMcdFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.mu.len())
}

/// Copies the `p` location estimates.
///
/// # Safety
/// `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn rv_mcd_location(fit: *const RvMcdFit, out: *mut f64, len: usize) -> RvStatus {
    guard(|| {
        let f = &ref_arg(fit, "fit")?.0;
        slice_out(out, len, f.mu.len(), "out")?.copy_from_slice(&f.mu);
        Ok(())
    })
}

/// Copies the `p * p` scatter matrix, row-major.
///
/// # Safety
/// `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn rv_mcd_scatter(fit: *const RvMcdFit, out: *mut f64, len: usize) -> RvStatus {
    guard(|| {
        let f = &ref_arg(fit, "fit")?.0;
        let s = f.sigma.as_slice();
        slice_out(out, len, s.len(), "out")?.copy_from_slice(s);
        Ok(())
    })
}

/// Copies the sorted zero-based row indices of the raw subset and stores
/// their number in `count`.
///
/// # Safety
/// `out` must hold `len` values; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_mcd_support(fit: *const RvMcdFit, out: *mut usize, len: usize, count: *mut usize) -> RvStatus {
    guard(|| {
        let f = &ref_arg(fit, "fit")?.0;
        *out_arg(count, "count")? = f.support.len();
        slice_out(out, len, f.support.len(), "out")?.copy_from_slice(&f.support);
        Ok(())
    })
}
