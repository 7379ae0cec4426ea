//! C ABI for mathnorm.
//!
//! Conventions:
//! - Every fallible call returns an `MnStatus`; results go through out
//!   pointers. On failure `mn_last_error_message` describes the error for
//!   the calling thread.
//! - Strings passed in are NUL-terminated UTF-8. Strings returned are owned
//!   by the caller and must be released with `mn_string_free`.
//! - `MnNormalizer` and `MnImage` are opaque handles with matching `_free`
//!   functions. Handles are immutable after creation and may be shared
//!   across threads.
//! - Token sequences for the metric functions are whitespace-separated.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mathnorm::imageops::{self, GrayImage};
use mathnorm::metrics;
use mathnorm::normalizer::{NormConfig, Normalizer};
use mathnorm::parser::Mode;
use mathnorm::tokenizer::tokenize_with_cap;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The normalizer rejected the input; the message holds the reason.
    Rejected = 3,
    TokenizeError = 4,
    ConfigError = 5,
    ImageError = 6,
    InvalidArgument = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnMode {
    Gt = 0,
    Rendering = 1,
}

impl From<MnMode> for Mode {
    fn from(m: MnMode) -> Mode {
        match m {
            MnMode::Gt => Mode::Gt,
            MnMode::Rendering => Mode::Rendering,
        }
    }
}

/// Half-open row range `[start, end)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MnRange {
    pub start: usize,
    pub end: usize,
}

pub struct MnNormalizer {
    inner: Normalizer,
}

pub struct MnImage {
    inner: GrayImage,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type Fallible<T> = Result<T, (MnStatus, String)>;

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Fallible<()>) -> MnStatus {
    clear_error();
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MnStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MnStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Fallible<&'a str> {
    if p.is_null() {
        return Err((MnStatus::NullPointer, format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (MnStatus::InvalidUtf8, format!("{name}: {e}")))
}

fn out_arg<'a, T>(p: *mut T, name: &str) -> Fallible<&'a mut T> {
    // SAFETY: caller promises `p` is either NULL or valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| (MnStatus::NullPointer, format!("{name} is NULL")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("NULs removed")
        .into_raw()
}

fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next mathnorm call on the same thread.
#[no_mangle]
pub extern "C" fn mn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn mn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Normalizer with the built-in default tables.
#[no_mangle]
pub extern "C" fn mn_normalizer_new(mode: MnMode, out: *mut *mut MnNormalizer) -> MnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = Normalizer::new(NormConfig::default().with_mode(mode.into()))
            .map_err(|e| (MnStatus::ConfigError, e.to_string()))?;
        *out = Box::into_raw(Box::new(MnNormalizer { inner }));
        Ok(())
    })
}

/// Normalizer from a `key = value` config file.
#[no_mangle]
pub unsafe extern "C" fn mn_normalizer_from_config(
    path: *const c_char,
    mode: MnMode,
    out: *mut *mut MnNormalizer,
) -> MnStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let cfg = NormConfig::load(Path::new(path))
            .map_err(|e| (MnStatus::ConfigError, format!("{path}: {e}")))?;
        let inner = Normalizer::new(cfg.with_mode(mode.into()))
            .map_err(|e| (MnStatus::ConfigError, e.to_string()))?;
        *out = Box::into_raw(Box::new(MnNormalizer { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mn_normalizer_free(n: *mut MnNormalizer) {
    if !n.is_null() {
        drop(Box::from_raw(n));
    }
}

/// Canonical form of `input` as space-separated tokens. On rejection returns
/// `Rejected`, leaves `*out` NULL and sets the message to the reason, e.g.
/// `forbidden-token \cite`.
#[no_mangle]
pub unsafe extern "C" fn mn_normalize(
    n: *const MnNormalizer,
    input: *const c_char,
    out: *mut *mut c_char,
) -> MnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let n = n
            .as_ref()
            .ok_or((MnStatus::NullPointer, "normalizer is NULL".to_owned()))?;
        let input = str_arg(input, "input")?;
        let seq = n
            .inner
            .normalize(input)
            .map_err(|r| (MnStatus::Rejected, r.to_string()))?;
        *out = into_c_string(seq.to_string());
        Ok(())
    })
}

/// Tokenizes `input` into space-separated tokens.
#[no_mangle]
pub unsafe extern "C" fn mn_tokenize(input: *const c_char, out: *mut *mut c_char) -> MnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let input = str_arg(input, "input")?;
        let seq = tokenize_with_cap(input, mathnorm::tokenizer::DEFAULT_MAX_INPUT_CHARS)
            .map_err(|e| (MnStatus::TokenizeError, e.to_string()))?;
        *out = into_c_string(seq.to_string());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mn_levenshtein(
    gt: *const c_char,
    pre: *const c_char,
    out: *mut usize,
) -> MnStatus {
    guard(|| {
        let (g, p) = (str_arg(gt, "gt")?, str_arg(pre, "pre")?);
        *out_arg(out, "out")? = metrics::levenshtein(&tokens(g), &tokens(p)).distance;
        Ok(())
    })
}

/// Edit score in percent; 100 when both sequences are empty.
#[no_mangle]
pub unsafe extern "C" fn mn_edit_score(
    gt: *const c_char,
    pre: *const c_char,
    out: *mut f64,
) -> MnStatus {
    guard(|| {
        let (g, p) = (str_arg(gt, "gt")?, str_arg(pre, "pre")?);
        *out_arg(out, "out")? = metrics::edit_score(&tokens(g), &tokens(p));
        Ok(())
    })
}

/// Sentence Bleu-4 in percent, unsmoothed.
#[no_mangle]
pub unsafe extern "C" fn mn_bleu4(
    gt: *const c_char,
    pre: *const c_char,
    out: *mut f64,
) -> MnStatus {
    guard(|| {
        let (g, p) = (str_arg(gt, "gt")?, str_arg(pre, "pre")?);
        *out_arg(out, "out")? = metrics::bleu4(&tokens(g), &tokens(p));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mn_exact_match(
    gt: *const c_char,
    pre: *const c_char,
    out: *mut bool,
) -> MnStatus {
    guard(|| {
        let (g, p) = (str_arg(gt, "gt")?, str_arg(pre, "pre")?);
        *out_arg(out, "out")? = metrics::exact_match(&tokens(g), &tokens(p));
        Ok(())
    })
}

/// Loads a P2 or P5 PGM file.
#[no_mangle]
pub unsafe extern "C" fn mn_image_load(path: *const c_char, out: *mut *mut MnImage) -> MnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let inner =
            GrayImage::load(path).map_err(|e| (MnStatus::ImageError, format!("{path}: {e}")))?;
        *out = Box::into_raw(Box::new(MnImage { inner }));
        Ok(())
    })
}

/// Copies `width * height` row-major bytes (0 black, 255 white).
#[no_mangle]
pub unsafe extern "C" fn mn_image_from_pixels(
    width: usize,
    height: usize,
    pixels: *const u8,
    out: *mut *mut MnImage,
) -> MnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        if pixels.is_null() {
            return Err((MnStatus::NullPointer, "pixels is NULL".to_owned()));
        }
        let len = width
            .checked_mul(height)
            .ok_or((MnStatus::InvalidArgument, "dimensions overflow".to_owned()))?;
        let data = std::slice::from_raw_parts(pixels, len).to_vec();
        let inner = GrayImage::new(width, height, data)
            .map_err(|e| (MnStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(MnImage { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mn_image_free(img: *mut MnImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Width in pixels, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn mn_image_width(img: *const MnImage) -> usize {
    img.as_ref().map_or(0, |i| i.inner.width())
}

/// Height in pixels, 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn mn_image_height(img: *const MnImage) -> usize {
    img.as_ref().map_or(0, |i| i.inner.height())
}

#[no_mangle]
pub unsafe extern "C" fn mn_image_is_blank(
    img: *const MnImage,
    white_threshold: u8,
    out: *mut bool,
) -> MnStatus {
    guard(|| {
        let img = img
            .as_ref()
            .ok_or((MnStatus::NullPointer, "image is NULL".to_owned()))?;
        *out_arg(out, "out")? = imageops::is_blank(&img.inner, white_threshold);
        Ok(())
    })
}

/// Y-cut segmentation. Writes up to `capacity` ranges to `ranges` and the
/// total count to `*count`; returns `BufferTooSmall` if they did not all
/// fit. `ranges` may be NULL when `capacity` is 0 to query the count.
#[no_mangle]
pub unsafe extern "C" fn mn_image_ycut(
    img: *const MnImage,
    white_threshold: u8,
    min_gap: usize,
    min_segment: usize,
    ranges: *mut MnRange,
    capacity: usize,
    count: *mut usize,
) -> MnStatus {
    guard(|| {
        let img = img
            .as_ref()
            .ok_or((MnStatus::NullPointer, "image is NULL".to_owned()))?;
        let count = out_arg(count, "count")?;
        if ranges.is_null() && capacity > 0 {
            return Err((MnStatus::NullPointer, "ranges is NULL".to_owned()));
        }
        let segs = imageops::ycut(&img.inner, white_threshold, min_gap, min_segment);
        *count = segs.len();
        for (i, r) in segs.iter().take(capacity).enumerate() {
            *ranges.add(i) = MnRange {
                start: r.start,
                end: r.end,
            };
        }
        if segs.len() > capacity {
            return Err((
                MnStatus::BufferTooSmall,
                format!("{} ranges, capacity {capacity}", segs.len()),
            ));
        }
        Ok(())
    })
}
