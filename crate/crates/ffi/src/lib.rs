//! C interface to pwfnet.
//!
//! Models and images are opaque heap handles created by `pwf_*_new` or
//! `pwf_*_load` and released with the matching `pwf_*_free`. Every fallible
//! call returns a `pwf_status`; on failure the message is kept per thread
//! and can be read with `pwf_last_error`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pwfnet::imaging::{load_checkpoint, load_image, psnr, save_checkpoint, save_image, ssim};
use pwfnet::model::{param_count, Model, ModelConfig, Variant};
use pwfnet::swap::{subband_swap, BandSet, SwapSpec};
use pwfnet::wavelet::{filter_bank, FamilyTag};
use pwfnet::{Error, Tensor};

pub const PWF_VARIANT_S: u32 = 0;
pub const PWF_VARIANT_M: u32 = 1;
pub const PWF_VARIANT_L: u32 = 2;

pub const PWF_BAND_LL: u32 = 1;
pub const PWF_BAND_LH: u32 = 2;
pub const PWF_BAND_HL: u32 = 4;
pub const PWF_BAND_HH: u32 = 8;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PwfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Io = 4,
    Format = 5,
    Architecture = 6,
    NonFinite = 7,
    Internal = 8,
    Panic = 9,
}

/// Opaque restoration network.
pub struct PwfModel {
    inner: Model,
}

/// Opaque CHW image with values nominally in [0, 1].
pub struct PwfImage {
    inner: Tensor,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PwfStatus {
    match e {
        Error::Shape(_) => PwfStatus::Shape,
        Error::InvalidArgument(_) | Error::Unknown { .. } => PwfStatus::InvalidArgument,
        Error::NonFinite(_) => PwfStatus::NonFinite,
        Error::Format { .. } | Error::Json(_) => PwfStatus::Format,
        Error::Io(_) => PwfStatus::Io,
        Error::Architecture(_) => PwfStatus::Architecture,
        _ => PwfStatus::Internal,
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

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PwfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PwfStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {}", what));
            PwfStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            PwfStatus::Panic
        }
    }
}

unsafe fn by_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail::Lib(Error::InvalidArgument("path is not valid UTF-8".into())))
}

fn variant(v: u32) -> Result<Variant, Fail> {
    match v {
        PWF_VARIANT_S => Ok(Variant::S),
        PWF_VARIANT_M => Ok(Variant::M),
        PWF_VARIANT_L => Ok(Variant::L),
        _ => Err(Fail::Lib(Error::InvalidArgument(format!("variant {} is not 0, 1 or 2", v)))),
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pwf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns the full message
/// length excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pwf_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a freshly initialised model (identity restoration).
///
/// # Safety
/// `out` must be a valid pointer to a `pwf_model *` slot.
#[no_mangle]
pub unsafe extern "C" fn pwf_model_new(
    base_channels: usize,
    blocks_fine: usize,
    blocks_mid: usize,
    blocks_coarse: usize,
    seed: u64,
    out: *mut *mut PwfModel,
) -> PwfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = ModelConfig {
            base_channels,
            blocks_per_level: [blocks_fine, blocks_mid, blocks_coarse],
            seed,
            ..Default::default()
        };
        *out = boxed(PwfModel {
            inner: Model::build(&cfg)?,
        });
        Ok(())
    })
}

/// Loads a checkpoint written by `pwfnet train` or `pwf_model_save`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn pwf_model_load(path: *const c_char, out: *mut *mut PwfModel) -> PwfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ck = load_checkpoint(path_arg(path)?)?;
        *out = boxed(PwfModel { inner: ck.model });
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pwf_model_save(model: *const PwfModel, path: *const c_char) -> PwfStatus {
    guard(|| {
        let m = by_ref(model, "model")?;
        save_checkpoint(&m.inner, None, 0, path_arg(path)?)?;
        Ok(())
    })
}

/// Number of trainable parameters used by `variant`.
///
/// # Safety
/// `model` must come from this library and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwf_model_param_count(model: *const PwfModel, variant_id: u32, out: *mut usize) -> PwfStatus {
    guard(|| {
        let m = by_ref(model, "model")?;
        let out = out_ptr(out, "out")?;
        *out = param_count(&m.inner, variant(variant_id)?);
        Ok(())
    })
}

/// Restores `input` at full resolution. The result is a new image owned
/// by the caller.
///
/// # Safety
/// `model` and `input` must come from this library; `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn pwf_model_restore(
    model: *const PwfModel,
    input: *const PwfImage,
    variant_id: u32,
    out: *mut *mut PwfImage,
) -> PwfStatus {
    guard(|| {
        let m = by_ref(model, "model")?;
        let x = by_ref(input, "input")?;
        let out = out_ptr(out, "out")?;
        let y = m.inner.forward(&x.inner, variant(variant_id)?)?;
        *out = boxed(PwfImage { inner: y.o1 });
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pwf_model_free(model: *mut PwfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Copies `channels * height * width` samples (channel-major) into a new image.
///
/// # Safety
/// `data` must point to that many readable doubles; `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn pwf_image_new(
    channels: usize,
    height: usize,
    width: usize,
    data: *const f64,
    out: *mut *mut PwfImage,
) -> PwfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if data.is_null() {
            return Err(Fail::Null("data"));
        }
        let n = channels
            .checked_mul(height)
            .and_then(|v| v.checked_mul(width))
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Shape(format!("bad image dims {}x{}x{}", channels, height, width)))?;
        let v = std::slice::from_raw_parts(data, n).to_vec();
        *out = boxed(PwfImage {
            inner: Tensor::new(&[channels, height, width], v)?,
        });
        Ok(())
    })
}

/// Reads a PNG or binary PPM file.
///
/// # Safety
/// `path` must be NUL-terminated and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn pwf_image_load(path: *const c_char, out: *mut *mut PwfImage) -> PwfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(PwfImage {
            inner: load_image(path_arg(path)?)?,
        });
        Ok(())
    })
}

/// Writes PNG or PPM depending on the extension.
///
/// # Safety
/// `image` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pwf_image_save(image: *const PwfImage, path: *const c_char) -> PwfStatus {
    guard(|| {
        let img = by_ref(image, "image")?;
        save_image(&img.inner, path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `image` must come from this library; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwf_image_dims(
    image: *const PwfImage,
    channels: *mut usize,
    height: *mut usize,
    width: *mut usize,
) -> PwfStatus {
    guard(|| {
        let img = by_ref(image, "image")?;
        let (c, h, w) = img.inner.dims3()?;
        *out_ptr(channels, "channels")? = c;
        *out_ptr(height, "height")? = h;
        *out_ptr(width, "width")? = w;
        Ok(())
    })
}

/// Copies the samples into `buf`, which must hold exactly
/// `channels * height * width` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pwf_image_read(image: *const PwfImage, buf: *mut f64, len: usize) -> PwfStatus {
    guard(|| {
        let img = by_ref(image, "image")?;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let data = img.inner.data();
        if len != data.len() {
            return Err(Error::Shape(format!("buffer holds {} samples, image has {}", len, data.len())).into());
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, len);
        Ok(())
    })
}

/// # Safety
/// `image` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pwf_image_free(image: *mut PwfImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// PSNR in dB for unit peak, capped at 100 for identical images.
///
/// # Safety
/// Both images must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwf_psnr(a: *const PwfImage, b: *const PwfImage, out: *mut f64) -> PwfStatus {
    guard(|| {
        let (a, b) = (by_ref(a, "a")?, by_ref(b, "b")?);
        *out_ptr(out, "out")? = psnr(&a.inner, &b.inner)?;
        Ok(())
    })
}

/// Mean SSIM over channels (11x11 Gaussian window).
///
/// # Safety
/// Both images must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwf_ssim(a: *const PwfImage, b: *const PwfImage, out: *mut f64) -> PwfStatus {
    guard(|| {
        let (a, b) = (by_ref(a, "a")?, by_ref(b, "b")?);
        *out_ptr(out, "out")? = ssim(&a.inner, &b.inner)?;
        Ok(())
    })
}

/// Replaces the bands in `band_mask` (an OR of `PWF_BAND_*`) of the
/// degraded image's pyramid with those of the clean image. `family` is a
/// wavelet name such as "haar" or "db2".
///
/// # Safety
/// Images must come from this library, `family` must be NUL-terminated and
/// `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn pwf_subband_swap(
    degraded: *const PwfImage,
    clean: *const PwfImage,
    levels: usize,
    band_mask: u32,
    family: *const c_char,
    out: *mut *mut PwfImage,
) -> PwfStatus {
    guard(|| {
        let d = by_ref(degraded, "degraded")?;
        let c = by_ref(clean, "clean")?;
        let out = out_ptr(out, "out")?;
        if family.is_null() {
            return Err(Fail::Null("family"));
        }
        let tag: FamilyTag = CStr::from_ptr(family)
            .to_str()
            .map_err(|_| Error::InvalidArgument("family is not valid UTF-8".into()))?
            .parse()?;
        let bits = u8::try_from(band_mask).map_err(|_| Error::InvalidArgument(format!("band mask {}", band_mask)))?;
        let spec = SwapSpec::whole(levels, BandSet::from_bits(bits)?);
        let y = subband_swap(&d.inner, &c.inner, &spec, &filter_bank(tag))?;
        *out = boxed(PwfImage { inner: y });
        Ok(())
    })
}
