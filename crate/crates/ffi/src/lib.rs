//! C ABI over `gwloc`.
//!
//! Datasets and models are opaque handles created by `*_open` and released
//! by `*_free`. Every fallible call returns a [`GwlocStatus`]; on failure the
//! message is kept per thread and read with [`gwloc_last_error_message`].
//! Handles are immutable after opening and may be shared across threads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use gwloc::dataset::{read_dataset, WaveDataset};
use gwloc::dispersion::{DispersionModel, ModeCurve};
use gwloc::eval::ale;
use gwloc::neuralloc::{read_model, InputScale, MlpModel};
use gwloc::physloc::{localize_grid_with, Resolution};
use gwloc::wavefield::Point2;
use gwloc::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GwlocStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Io = 3,
    Format = 4,
    Shape = 5,
    Index = 6,
    Domain = 7,
    Geometry = 8,
    DegenerateSignal = 9,
    Training = 10,
    Internal = 11,
    Panic = 12,
}

/// Dispersion curve family for [`gwloc_wavenumber`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GwlocMode {
    /// `k = w / c`.
    Linear = 0,
    /// `k = sqrt(w / d)`.
    SquareRoot = 1,
}

/// Opaque dataset handle.
pub struct GwlocDataset {
    inner: WaveDataset,
}

/// Opaque trained-model handle.
pub struct GwlocModel {
    inner: MlpModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> GwlocStatus {
    match e {
        Error::Index { .. } => GwlocStatus::Index,
        Error::Domain(_) => GwlocStatus::Domain,
        Error::Geometry(_) => GwlocStatus::Geometry,
        Error::DegenerateSignal(_) => GwlocStatus::DegenerateSignal,
        Error::Split(_) | Error::Input(_) => GwlocStatus::InvalidInput,
        Error::Shape(_) => GwlocStatus::Shape,
        Error::Training { .. } => GwlocStatus::Training,
        Error::Format(_) => GwlocStatus::Format,
        Error::Sample { source, .. } => status_of(source),
        Error::Io(_) => GwlocStatus::Io,
        _ => GwlocStatus::Internal,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GwlocStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GwlocStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            GwlocStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside gwloc".into());
            GwlocStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    // SAFETY: caller guarantees `p` is null or valid for reads.
    unsafe { p.as_ref() }.ok_or(Fail::Null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: non-null and, per the caller's contract, valid for writes.
    unsafe { p.write(value) };
    Ok(())
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    // SAFETY: non-null NUL-terminated string per the caller's contract.
    let s = unsafe { CStr::from_ptr(p) };
    s.to_str()
        .map(str::to_owned)
        .map_err(|_| Fail::Lib(Error::Input("path is not valid UTF-8".into())))
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length excluding the terminator; `buf` may be null to query it.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn gwloc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: `buf` holds at least `len > n` bytes.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gwloc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opens a GWDS0001 dataset file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gwloc_dataset_open(path: *const c_char, out: *mut *mut GwlocDataset) -> GwlocStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let ds = read_dataset(path)?;
        let handle = Box::into_raw(Box::new(GwlocDataset { inner: ds }));
        unsafe { write(out, handle, "out") }
    })
}

/// Releases a dataset handle. Null is ignored.
///
/// # Safety
/// `ds` must be null or a handle from [`gwloc_dataset_open`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gwloc_dataset_free(ds: *mut GwlocDataset) {
    if !ds.is_null() {
        // SAFETY: created by Box::into_raw in gwloc_dataset_open.
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Number of samples, frequency bins and sensor pairs. Each record holds
/// `bins * pairs` values with index `q * pairs + pair`.
///
/// # Safety
/// `ds` must be a live handle; output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gwloc_dataset_shape(
    ds: *const GwlocDataset,
    samples: *mut usize,
    bins: *mut usize,
    pairs: *mut usize,
) -> GwlocStatus {
    guard(|| {
        let ds = &unsafe { deref(ds, "dataset") }?.inner;
        unsafe {
            write(samples, ds.len(), "samples")?;
            write(bins, ds.grid.len(), "bins")?;
            write(pairs, ds.layout.pairs.len(), "pairs")
        }
    })
}

/// Copies sample `index` (as stored, possibly noisy) into `data` and its
/// damage position into `label_x`, `label_y`.
///
/// # Safety
/// `ds` must be a live handle; `data` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gwloc_dataset_sample(
    ds: *const GwlocDataset,
    index: usize,
    data: *mut f64,
    len: usize,
    label_x: *mut f64,
    label_y: *mut f64,
) -> GwlocStatus {
    guard(|| {
        let ds = &unsafe { deref(ds, "dataset") }?.inner;
        let s = ds
            .samples
            .get(index)
            .ok_or(Error::Index { index, len: ds.len() })?;
        let src = s.data.as_slice();
        if len != src.len() {
            return Err(Error::Shape(format!("buffer holds {len} values, record has {}", src.len())).into());
        }
        if data.is_null() {
            return Err(Fail::Null("data"));
        }
        // SAFETY: `data` is valid for `len == src.len()` writes.
        unsafe { slice::from_raw_parts_mut(data, len) }.copy_from_slice(src);
        unsafe {
            write(label_x, s.label.x, "label_x")?;
            write(label_y, s.label.y, "label_y")
        }
    })
}

/// Physical-model grid search on stored sample `index` over an `nx` by `ny`
/// grid; writes the best cell center.
///
/// # Safety
/// `ds` must be a live handle; output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gwloc_localize(
    ds: *const GwlocDataset,
    index: usize,
    nx: usize,
    ny: usize,
    x: *mut f64,
    y: *mut f64,
) -> GwlocStatus {
    guard(|| {
        let ds = &unsafe { deref(ds, "dataset") }?.inner;
        let s = ds
            .samples
            .get(index)
            .ok_or(Error::Index { index, len: ds.len() })?;
        if ds.standardization.is_some() {
            return Err(Error::Input("dataset records are standardized".into()).into());
        }
        let resolution = Resolution::new(nx, ny)?;
        let layout = ds.layout_of(index)?;
        let model = ds.dispersion(1.0)?;
        let map = localize_grid_with(&s.data, &layout, &ds.grid, &model, &ds.excitation, resolution)?;
        let p = map.argmax();
        unsafe {
            write(x, p.x, "x")?;
            write(y, p.y, "y")
        }
    })
}

/// Opens a GWNN0001 checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gwloc_model_open(path: *const c_char, out: *mut *mut GwlocModel) -> GwlocStatus {
    guard(|| {
        let path = unsafe { path_arg(path) }?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let model = read_model(path)?;
        let handle = Box::into_raw(Box::new(GwlocModel { inner: model }));
        unsafe { write(out, handle, "out") }
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from [`gwloc_model_open`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gwloc_model_free(model: *mut GwlocModel) {
    if !model.is_null() {
        // SAFETY: created by Box::into_raw in gwloc_model_open.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Feature count the model expects.
///
/// # Safety
/// `model` must be a live handle; `dim` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gwloc_model_input_dim(model: *const GwlocModel, dim: *mut usize) -> GwlocStatus {
    guard(|| {
        let m = &unsafe { deref(model, "model") }?.inner;
        unsafe { write(dim, m.input_dim(), "dim") }
    })
}

/// Predicts a damage position from one raw (unstandardized) record.
///
/// # Safety
/// `model` must be a live handle; `features` valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn gwloc_model_predict(
    model: *const GwlocModel,
    features: *const f64,
    len: usize,
    x: *mut f64,
    y: *mut f64,
) -> GwlocStatus {
    guard(|| {
        let m = &unsafe { deref(model, "model") }?.inner;
        if features.is_null() {
            return Err(Fail::Null("features"));
        }
        // SAFETY: valid for `len` reads per the caller's contract.
        let f = unsafe { slice::from_raw_parts(features, len) };
        let p = m.predict_features(f, InputScale::Raw)?;
        unsafe {
            write(x, p.x, "x")?;
            write(y, p.y, "y")
        }
    })
}

/// Average localization error: mean and population standard deviation of
/// the distances between `n` truth and prediction points, each given as
/// interleaved `x, y` arrays of length `2 n`.
///
/// # Safety
/// `truth` and `pred` must be valid for `2 n` reads.
#[no_mangle]
pub unsafe extern "C" fn gwloc_ale(
    truth: *const f64,
    pred: *const f64,
    n: usize,
    mean: *mut f64,
    std: *mut f64,
) -> GwlocStatus {
    guard(|| {
        if truth.is_null() || pred.is_null() {
            return Err(Fail::Null("points"));
        }
        let len = n
            .checked_mul(2)
            .ok_or_else(|| Error::Input("point count overflows".into()))?;
        // SAFETY: both valid for `2 n` reads per the caller's contract.
        let (t, p) = unsafe { (slice::from_raw_parts(truth, len), slice::from_raw_parts(pred, len)) };
        let pairs: Vec<(Point2, Point2)> = t
            .chunks_exact(2)
            .zip(p.chunks_exact(2))
            .map(|(a, b)| (Point2::new(a[0], a[1]), Point2::new(b[0], b[1])))
            .collect();
        let (m, s) = ale(&pairs)?;
        unsafe {
            write(mean, m, "mean")?;
            write(std, s, "std")
        }
    })
}

/// Wavenumber of one mode (a [`GwlocMode`] value) at angular frequency
/// `omega` under scale `alpha`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gwloc_wavenumber(
    mode: u32,
    constant: f64,
    alpha: f64,
    omega: f64,
    out: *mut f64,
) -> GwlocStatus {
    guard(|| {
        let curve = match mode {
            m if m == GwlocMode::Linear as u32 => ModeCurve::Linear { c: constant },
            m if m == GwlocMode::SquareRoot as u32 => ModeCurve::SquareRoot { d: constant },
            m => return Err(Error::Input(format!("unknown mode {m}")).into()),
        };
        let k = DispersionModel::new(vec![curve], alpha)?.wavenumber(0, omega)?;
        unsafe { write(out, k, "out") }
    })
}
