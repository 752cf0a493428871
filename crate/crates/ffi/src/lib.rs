//! C ABI over `fst-core`.
//!
//! Objects are opaque handles created by `*_new`/`*_load`-style functions and
//! released with the matching `*_free`. Every fallible call returns an
//! [`FstStatus`]; on failure [`fst_last_error`] describes the error on the
//! calling thread. Images cross the boundary as interleaved RGB `double`
//! buffers in `[0, 1]`, row-major, `width * height * 3` values long.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fst_core::color::{apply_filter, eval_filter, identity_params, ColorRGB, FilterParams};
use fst_core::defilter::{ExternalDefilterizer, OracleDefilterizer};
use fst_core::error::Error;
use fst_core::lut::{apply_lut, compile_lut, export_cube, Lut3D};
use fst_core::metrics::{ciede2000, evaluate, srgb_to_lab, Lab};
use fst_core::raster::{ImageRaster, UncertaintyMap};
use fst_core::regression::{estimate_filter, RegressionConfig};

/// Result of every fallible call. Nonzero values match the `fst` CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FstStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MissingInput = 3,
    Io = 4,
    Format = 5,
    BadMagic = 6,
    UnsupportedVersion = 7,
    CorruptUncertainty = 8,
    DimensionMismatch = 9,
    TooFewSamples = 10,
    IllConditioned = 11,
    NonFinite = 12,
    Panic = 13,
}

/// Filter parameters handle.
pub struct FstParams(FilterParams);

/// Compiled 3D LUT handle.
pub struct FstLut(Lut3D);

/// Image comparison summary.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FstMetrics {
    /// `+inf` for identical images.
    pub psnr_db: f64,
    pub mean_de2000: f64,
    pub max_de2000: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FstStatus {
    match e.exit_code() {
        2 => FstStatus::InvalidArgument,
        3 => FstStatus::MissingInput,
        4 => FstStatus::Io,
        5 => FstStatus::Format,
        6 => FstStatus::BadMagic,
        7 => FstStatus::UnsupportedVersion,
        8 => FstStatus::CorruptUncertainty,
        9 => FstStatus::DimensionMismatch,
        10 => FstStatus::TooFewSamples,
        11 => FstStatus::IllConditioned,
        12 => FstStatus::NonFinite,
        _ => FstStatus::Format,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FstStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            FstStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            FstStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            FstStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Core(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

unsafe fn rgb_slice<'a>(p: *const f64, width: usize, height: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::InvalidArgument("image dimensions overflow".into()))?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn raster(p: *const f64, width: usize, height: usize, what: &'static str) -> Result<ImageRaster, Failure> {
    let data = rgb_slice(p, width, height, what)?;
    Ok(ImageRaster::new(width, height, data.to_vec())?)
}

unsafe fn write_raster(img: &ImageRaster, out: *mut f64) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    let data = img.data();
    ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
    Ok(())
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fst_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fst_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Identity filter, with or without channel-correlation terms.
///
/// # Safety
/// `out` must be a valid pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn fst_params_identity(cc: bool, out: *mut *mut FstParams) -> FstStatus {
    guard(|| store(out, FstParams(identity_params(cc))))
}

/// Parses parameters from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fst_params_from_json(json: *const c_char, out: *mut *mut FstParams) -> FstStatus {
    guard(|| {
        let p = FilterParams::from_json(c_str(json, "json")?)?;
        store(out, FstParams(p))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fst_params_load(path: *const c_char, out: *mut *mut FstParams) -> FstStatus {
    guard(|| {
        let p = FilterParams::load(c_str(path, "path")?)?;
        store(out, FstParams(p))
    })
}

/// # Safety
/// `params` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fst_params_save(params: *const FstParams, path: *const c_char) -> FstStatus {
    guard(|| {
        let p = non_null(params, "params")?;
        p.0.save(c_str(path, "path")?)?;
        Ok(())
    })
}

/// Serializes to JSON. Release the string with [`fst_string_free`].
///
/// # Safety
/// `params` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fst_params_to_json(params: *const FstParams, out: *mut *mut c_char) -> FstStatus {
    guard(|| {
        let p = non_null(params, "params")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = CString::new(p.0.to_json()).expect("json has no NUL").into_raw();
        Ok(())
    })
}

/// Whether the parameters include channel-correlation terms.
///
/// # Safety
/// `params` must be a live handle or null (returns false).
#[no_mangle]
pub unsafe extern "C" fn fst_params_has_cc(params: *const FstParams) -> bool {
    params.as_ref().is_some_and(|p| p.0.cc)
}

/// Writes the 10 (or 13 with cc) coefficients of output `channel` (0..3)
/// into `out`, which must hold `capacity` doubles. `count` receives the
/// number of coefficients.
///
/// # Safety
/// Pointers must be valid; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn fst_params_coefficients(
    params: *const FstParams,
    channel: usize,
    out: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> FstStatus {
    guard(|| {
        let p = non_null(params, "params")?;
        if channel > 2 {
            return Err(Error::InvalidArgument(format!("channel {channel} out of range")).into());
        }
        let coeffs = &p.0.coefficients()[channel];
        if count.is_null() {
            return Err(Failure::Null("count"));
        }
        *count = coeffs.len();
        if capacity < coeffs.len() {
            return Err(Error::InvalidArgument(format!("capacity {capacity} < {} coefficients", coeffs.len())).into());
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        ptr::copy_nonoverlapping(coeffs.as_ptr(), out, coeffs.len());
        Ok(())
    })
}

/// # Safety
/// `params` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fst_params_free(params: *mut FstParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fst_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Evaluates the filter at one color.
///
/// # Safety
/// `rgb_in` and `rgb_out` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn fst_params_eval(
    params: *const FstParams,
    rgb_in: *const f64,
    clamp: bool,
    rgb_out: *mut f64,
) -> FstStatus {
    guard(|| {
        let p = non_null(params, "params")?;
        let c = non_null(rgb_in.cast::<[f64; 3]>(), "rgb_in")?;
        if rgb_out.is_null() {
            return Err(Failure::Null("rgb_out"));
        }
        let y = eval_filter(&p.0, ColorRGB::from_array(*c), clamp).to_array();
        ptr::copy_nonoverlapping(y.as_ptr(), rgb_out, 3);
        Ok(())
    })
}

/// Applies the polynomial directly to every pixel; `out` may alias `input`.
///
/// # Safety
/// `input` and `out` must hold `width * height * 3` doubles.
#[no_mangle]
pub unsafe extern "C" fn fst_apply_filter(
    params: *const FstParams,
    input: *const f64,
    width: usize,
    height: usize,
    out: *mut f64,
) -> FstStatus {
    guard(|| {
        let p = non_null(params, "params")?;
        let img = raster(input, width, height, "input")?;
        write_raster(&apply_filter(&p.0, &img), out)
    })
}

/// Estimates a filter from a filtered image and its restored original.
/// `variance` holds one per-pixel uncertainty value (`width * height`
/// floats) or is null for uniform weights. `estimate` receives the handle.
///
/// # Safety
/// Image buffers must hold `width * height * 3` doubles, `variance`
/// `width * height` floats when non-null.
#[no_mangle]
pub unsafe extern "C" fn fst_estimate_filter(
    filtered: *const f64,
    restored: *const f64,
    variance: *const f32,
    width: usize,
    height: usize,
    lambda: f64,
    cc: bool,
    seed: u64,
    estimate: *mut *mut FstParams,
) -> FstStatus {
    guard(|| {
        let filtered = raster(filtered, width, height, "filtered")?;
        let restored = raster(restored, width, height, "restored")?;
        let cfg = RegressionConfig {
            lambda,
            cc,
            seed,
            ..RegressionConfig::default()
        };
        let p = if variance.is_null() {
            estimate_filter(&filtered, &OracleDefilterizer::new(restored), &cfg)?
        } else {
            let var = std::slice::from_raw_parts(variance, width * height).to_vec();
            let unc = UncertaintyMap::new(width, height, var)?;
            estimate_filter(&filtered, &ExternalDefilterizer::from_parts(restored, unc)?, &cfg)?
        };
        store(estimate, FstParams(p))
    })
}

/// Samples the filter on a `size`³ lattice.
///
/// # Safety
/// `params` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fst_lut_compile(params: *const FstParams, size: usize, out: *mut *mut FstLut) -> FstStatus {
    guard(|| {
        let p = non_null(params, "params")?;
        let lut = compile_lut(&p.0, size)?;
        store(out, FstLut(lut))
    })
}

/// Lattice points per axis, or 0 for a null handle.
///
/// # Safety
/// `lut` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fst_lut_size(lut: *const FstLut) -> usize {
    lut.as_ref().map_or(0, |l| l.0.size())
}

/// Trilinear lookup of every pixel; `out` may alias `input`.
///
/// # Safety
/// `input` and `out` must hold `width * height * 3` doubles.
#[no_mangle]
pub unsafe extern "C" fn fst_lut_apply(
    lut: *const FstLut,
    input: *const f64,
    width: usize,
    height: usize,
    out: *mut f64,
) -> FstStatus {
    guard(|| {
        let l = non_null(lut, "lut")?;
        let img = raster(input, width, height, "input")?;
        write_raster(&apply_lut(&l.0, &img), out)
    })
}

/// Writes a `.cube` file; `title` may be null.
///
/// # Safety
/// `lut` must be a live handle; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fst_lut_export_cube(
    lut: *const FstLut,
    path: *const c_char,
    title: *const c_char,
) -> FstStatus {
    guard(|| {
        let l = non_null(lut, "lut")?;
        let title = if title.is_null() {
            None
        } else {
            Some(c_str(title, "title")?)
        };
        export_cube(&l.0, c_str(path, "path")?, title)?;
        Ok(())
    })
}

/// # Safety
/// `lut` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fst_lut_free(lut: *mut FstLut) {
    if !lut.is_null() {
        drop(Box::from_raw(lut));
    }
}

/// PSNR and CIEDE2000 statistics of `pred` against `truth`.
///
/// # Safety
/// Buffers must hold `width * height * 3` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fst_evaluate(
    pred: *const f64,
    truth: *const f64,
    width: usize,
    height: usize,
    out: *mut FstMetrics,
) -> FstStatus {
    guard(|| {
        let a = raster(pred, width, height, "pred")?;
        let b = raster(truth, width, height, "truth")?;
        let r = evaluate(&a, &b)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = FstMetrics {
            psnr_db: r.psnr_db,
            mean_de2000: r.mean_de2000,
            max_de2000: r.max_de2000,
        };
        Ok(())
    })
}

/// Converts one sRGB color in `[0, 1]` to CIELAB (D65).
///
/// # Safety
/// `rgb` and `lab` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn fst_srgb_to_lab(rgb: *const f64, lab: *mut f64) -> FstStatus {
    guard(|| {
        let c = non_null(rgb.cast::<[f64; 3]>(), "rgb")?;
        if lab.is_null() {
            return Err(Failure::Null("lab"));
        }
        let l = srgb_to_lab(ColorRGB::from_array(*c));
        ptr::copy_nonoverlapping([l.l, l.a, l.b].as_ptr(), lab, 3);
        Ok(())
    })
}

/// CIEDE2000 difference of two Lab colors, or NaN if either pointer is null.
///
/// # Safety
/// `lab1` and `lab2` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn fst_ciede2000(lab1: *const f64, lab2: *const f64) -> f64 {
    match (lab1.cast::<[f64; 3]>().as_ref(), lab2.cast::<[f64; 3]>().as_ref()) {
        (Some(a), Some(b)) => ciede2000(Lab::new(a[0], a[1], a[2]), Lab::new(b[0], b[1], b[2])),
        _ => f64::NAN,
    }
}
