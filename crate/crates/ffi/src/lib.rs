//! C ABI over `polar-gscl`.
//!
//! Codes and decoders are opaque heap handles created by `pg_*_new` and
//! released by the matching `pg_*_free`. Every fallible call returns a
//! [`PgStatus`]; the message of the most recent failure on the calling thread
//! is available from [`pg_last_error_message`]. Panics never cross the
//! boundary.
//!
//! A decoder is not thread-safe; use one per thread. Codes are immutable and
//! may be shared once created.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use polar_gscl::channels::{snr_to_sigma, ChannelObservation};
use polar_gscl::construction::{bec_reliabilities, construct_constrained, construct_unconstrained, ga_reliabilities};
use polar_gscl::decode::{threshold_log, GsclDecoder, Threshold};
use polar_gscl::polar::{encode, PolarCode};
use polar_gscl::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Contract = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgChannel {
    /// Design parameter is E_b/N_0 in dB.
    Biawgn = 0,
    /// Design parameter is the erasure probability.
    Bec = 1,
}

/// Outcome of one decode.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PgDecodeResult {
    /// 1 when the threshold test accepted the candidate, 0 for an erasure.
    pub accepted: i32,
    pub log_w_best: f64,
    pub log_p_y: f64,
    pub threshold_log: f64,
}

/// Opaque code handle.
pub struct PgCode(PolarCode);

/// Opaque decoder handle.
pub struct PgDecoder(GsclDecoder);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PgStatus {
    match e {
        Error::InvalidArgument(_) => PgStatus::InvalidArgument,
        Error::Capacity(_) => PgStatus::Capacity,
        Error::Contract(_) => PgStatus::Contract,
        Error::Io(_) => PgStatus::Io,
        Error::Json(_) => PgStatus::Parse,
    }
}

struct Fail(PgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PgStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> PgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PgStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PgStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn code_ref<'a>(code: *const PgCode) -> Result<&'a PolarCode, Fail> {
    code.as_ref().map(|c| &c.0).ok_or_else(|| null("code"))
}

fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a code of length `n` from 1-based frozen indices, frozen to 0.
///
/// # Safety
/// `frozen` must point to `frozen_len` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pg_code_new(
    n: usize,
    frozen: *const usize,
    frozen_len: usize,
    out: *mut *mut PgCode,
) -> PgStatus {
    guard(|| {
        let frozen = slice(frozen, frozen_len, "frozen")?;
        store(out, PgCode(PolarCode::new(n, frozen.iter().copied())?))
    })
}

/// Parses a code from its JSON file format.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_code_from_json(json: *const c_char, out: *mut *mut PgCode) -> PgStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| Fail(PgStatus::Parse, "json is not UTF-8".into()))?;
        store(out, PgCode(PolarCode::from_json(text)?))
    })
}

/// Constructs a code, capping the mixing factor at `gamma_star` unless it
/// is negative.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_code_construct(
    n: usize,
    k: usize,
    gamma_star: i64,
    channel: PgChannel,
    design_param: f64,
    out: *mut *mut PgCode,
) -> PgStatus {
    guard(|| {
        if k > n {
            return Err(Fail(PgStatus::InvalidArgument, format!("k = {k} exceeds n = {n}")));
        }
        let profile = match channel {
            PgChannel::Biawgn => ga_reliabilities(snr_to_sigma(design_param, k.max(1) as f64 / n.max(1) as f64)?, n)?,
            PgChannel::Bec => bec_reliabilities(design_param, n)?,
        };
        let code = match usize::try_from(gamma_star) {
            Ok(g) => construct_constrained(n, k, g, &profile)?,
            Err(_) => construct_unconstrained(n, k, &profile)?,
        };
        store(out, PgCode(code))
    })
}

/// Writes the JSON form of `code` into a new string, to be released with
/// [`pg_string_free`].
///
/// # Safety
/// `code` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_code_to_json(code: *const PgCode, out: *mut *mut c_char) -> PgStatus {
    guard(|| {
        let code = code_ref(code)?;
        if out.is_null() {
            return Err(null("output string"));
        }
        let text = serde_json::to_string(&code.to_file()).map_err(Error::from)?;
        *out = CString::new(text).map_err(|_| Fail(PgStatus::Parse, "NUL in JSON".into()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn pg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `code` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn pg_code_free(code: *mut PgCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Block length, or 0 for a null handle.
///
/// # Safety
/// `code` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pg_code_n(code: *const PgCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.n())
}

/// # Safety
/// `code` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pg_code_k(code: *const PgCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.k())
}

/// Mixing factor.
///
/// # Safety
/// `code` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pg_code_gamma(code: *const PgCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.mixing_factor())
}

/// 1-based position of the last frozen bit, 0 when nothing is frozen.
///
/// # Safety
/// `code` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pg_code_last_frozen(code: *const PgCode) -> usize {
    code.as_ref().map_or(0, |c| c.0.last_frozen())
}

/// `2^γ`, or 0 when it does not fit.
///
/// # Safety
/// `code` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pg_code_list_size(code: *const PgCode) -> usize {
    code.as_ref().and_then(|c| c.0.list_size_ml()).unwrap_or(0)
}

/// Encodes `k` information bits into `n` codeword bits.
///
/// # Safety
/// `info` must hold `info_len` bytes and `codeword` `codeword_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pg_encode(
    code: *const PgCode,
    info: *const u8,
    info_len: usize,
    codeword: *mut u8,
    codeword_len: usize,
) -> PgStatus {
    guard(|| {
        let code = code_ref(code)?;
        let info = slice(info, info_len, "info")?;
        let out = slice_mut(codeword, codeword_len, "codeword")?;
        if out.len() != code.n() {
            return Err(Fail(
                PgStatus::InvalidArgument,
                format!("codeword buffer holds {}, n = {}", out.len(), code.n()),
            ));
        }
        out.copy_from_slice(&encode(info, code)?);
        Ok(())
    })
}

/// Creates a GSCL decoder; `list_size` 0 selects `2^γ`.
///
/// # Safety
/// `code` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_decoder_new(code: *const PgCode, list_size: usize, out: *mut *mut PgDecoder) -> PgStatus {
    guard(|| {
        let code = code_ref(code)?;
        let dec = if list_size == 0 { GsclDecoder::new(code)? } else { GsclDecoder::with_list_size(code, list_size)? };
        store(out, PgDecoder(dec))
    })
}

/// # Safety
/// `decoder` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn pg_decoder_free(decoder: *mut PgDecoder) {
    if !decoder.is_null() {
        drop(Box::from_raw(decoder));
    }
}

unsafe fn finish(
    decoder: *mut PgDecoder,
    obs: ChannelObservation,
    t: f64,
    result: *mut PgDecodeResult,
    codeword: *mut u8,
    codeword_len: usize,
) -> Result<(), Fail> {
    let dec = decoder.as_mut().map(|d| &mut d.0).ok_or_else(|| null("decoder"))?;
    let result = result.as_mut().ok_or_else(|| null("result"))?;
    let t = if t == f64::NEG_INFINITY { Threshold::NEG_INFINITY } else { Threshold::new(t)? };
    let out = dec.decode(&obs, t)?;
    if !codeword.is_null() {
        let buf = slice_mut(codeword, codeword_len, "codeword")?;
        if buf.len() != out.metrics.codeword.len() {
            return Err(Fail(PgStatus::InvalidArgument, format!("codeword buffer holds {}", buf.len())));
        }
        buf.copy_from_slice(&out.metrics.codeword);
    }
    *result = PgDecodeResult {
        accepted: out.accepted as i32,
        log_w_best: out.metrics.log_w_best,
        log_p_y: out.metrics.log_p_y,
        threshold_log: out.threshold_log,
    };
    Ok(())
}

/// Decodes channel LLRs `ln W(y|0)/W(y|1)` with threshold `t` (`-INFINITY`
/// for the complete decoder). The candidate codeword is written to
/// `codeword` when it is not null, whether or not it was accepted.
///
/// # Safety
/// `llrs` must hold `len` values, `codeword` `codeword_len` bytes, and
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_decode_llrs(
    decoder: *mut PgDecoder,
    llrs: *const f64,
    len: usize,
    t: f64,
    result: *mut PgDecodeResult,
    codeword: *mut u8,
    codeword_len: usize,
) -> PgStatus {
    guard(|| {
        let obs = ChannelObservation::from_llrs(slice(llrs, len, "llrs")?)?;
        finish(decoder, obs, t, result, codeword, codeword_len)
    })
}

/// As [`pg_decode_llrs`], from per-symbol log-likelihoods laid out as
/// `ln W(y_j|0), ln W(y_j|1)` pairs (`2·len` values).
///
/// # Safety
/// `loglik` must hold `2·len` values; see [`pg_decode_llrs`].
#[no_mangle]
pub unsafe extern "C" fn pg_decode_loglik(
    decoder: *mut PgDecoder,
    loglik: *const f64,
    len: usize,
    t: f64,
    result: *mut PgDecodeResult,
    codeword: *mut u8,
    codeword_len: usize,
) -> PgStatus {
    guard(|| {
        let values = slice(
            loglik,
            len.checked_mul(2).ok_or_else(|| Fail(PgStatus::InvalidArgument, "length overflow".into()))?,
            "loglik",
        )?;
        let pairs = values.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
        let obs = ChannelObservation::from_log_likelihoods(pairs)?;
        finish(decoder, obs, t, result, codeword, codeword_len)
    })
}

/// Log of the acceptance bound `2^k·2^{nT}/(1+2^{nT})`.
#[no_mangle]
pub extern "C" fn pg_threshold_log(n: usize, k: usize, t: f64) -> f64 {
    match Threshold::new(t) {
        Ok(t) => threshold_log(n, k, t),
        Err(_) if t == f64::NEG_INFINITY => f64::NEG_INFINITY,
        Err(_) => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_handles_report_status() {
        let mut out: *mut PgCode = ptr::null_mut();
        let st = unsafe { pg_code_from_json(ptr::null(), &mut out) };
        assert_eq!(st, PgStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(pg_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("json"));
        assert_eq!(unsafe { pg_code_n(ptr::null()) }, 0);
    }

    #[test]
    fn errors_map_to_statuses() {
        let frozen = [1usize, 9];
        let mut out: *mut PgCode = ptr::null_mut();
        assert_eq!(unsafe { pg_code_new(8, frozen.as_ptr(), 2, &mut out) }, PgStatus::InvalidArgument);
        assert!(out.is_null());
        assert_eq!(unsafe { pg_code_construct(16, 4, 5, PgChannel::Biawgn, 2.0, &mut out) }, PgStatus::InvalidArgument);
        assert_eq!(pg_threshold_log(8, 4, f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert!(pg_threshold_log(8, 4, f64::NAN).is_nan());
    }
}
