//! C ABI over `wordsimt`.
//!
//! Sentences and schedules are opaque handles created by `wsimt_*` calls and
//! released with the matching `_free`. Every fallible call returns a
//! `WsimtStatus`; on failure `wsimt_last_error()` describes the error on the
//! calling thread. Strings returned to the caller are freed with
//! `wsimt_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wordsimt::harness::{evaluate_corpus, parse_corpus, CorpusText, EvalConfig, Policy};
use wordsimt::mask::intra_word_mask;
use wordsimt::{
    average_lagging, to_word_policy, waitk_token, waitk_word, word_average_lagging, AlParams, Error,
    MarkerConvention, Schedule, TokenizedSentence,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsimtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BufferTooSmall = 3,
    EmptyInput = 10,
    MalformedToken = 11,
    Index = 12,
    InvalidParameter = 13,
    InvalidSchedule = 14,
    InvalidTrace = 15,
    Dimension = 16,
    Boundary = 17,
    VocabularyAlignment = 18,
    Parse = 19,
    OracleRunaway = 20,
    EmptyCorpus = 21,
    Record = 22,
    Io = 23,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsimtMarkerConvention {
    Suffix = 0,
    Prefix = 1,
}

/// Opaque tokenized sentence.
pub struct WsimtSentence(TokenizedSentence);

/// Opaque READ schedule.
pub struct WsimtSchedule(Schedule);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> WsimtStatus {
    match e {
        Error::EmptyInput => WsimtStatus::EmptyInput,
        Error::MalformedToken { .. } => WsimtStatus::MalformedToken,
        Error::Index { .. } => WsimtStatus::Index,
        Error::InvalidParameter(_) => WsimtStatus::InvalidParameter,
        Error::InvalidSchedule(_) => WsimtStatus::InvalidSchedule,
        Error::InvalidTrace(_) => WsimtStatus::InvalidTrace,
        Error::Dimension(_) => WsimtStatus::Dimension,
        Error::Boundary(_) => WsimtStatus::Boundary,
        Error::VocabularyAlignment { .. } => WsimtStatus::VocabularyAlignment,
        Error::Parse { .. } => WsimtStatus::Parse,
        Error::OracleRunaway { .. } => WsimtStatus::OracleRunaway,
        Error::EmptyCorpus => WsimtStatus::EmptyCorpus,
        Error::Record { .. } => WsimtStatus::Record,
        Error::Io(_) => WsimtStatus::Io,
    }
}

struct Fail(WsimtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WsimtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WsimtStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            WsimtStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(WsimtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(WsimtStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out(values: &[usize], buf: *mut usize, cap: usize, out_len: *mut usize) -> Result<(), Fail> {
    put(out_len, values.len())?;
    if values.len() > cap {
        return Err(Fail(
            WsimtStatus::BufferTooSmall,
            format!("need {} elements, buffer holds {cap}", values.len()),
        ));
    }
    if !values.is_empty() {
        if buf.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    }
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(WsimtStatus::InvalidUtf8, "output contains NUL".into()))
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wsimt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn wsimt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse one line of marked subword tokens.
///
/// # Safety
/// `line` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wsimt_sentence_parse(
    line: *const c_char,
    convention: WsimtMarkerConvention,
    out: *mut *mut WsimtSentence,
) -> WsimtStatus {
    guard(|| {
        let line = str_arg(line, "line")?;
        let convention = match convention {
            WsimtMarkerConvention::Suffix => MarkerConvention::Suffix,
            WsimtMarkerConvention::Prefix => MarkerConvention::Prefix,
        };
        let sentence = TokenizedSentence::parse(line, convention)?;
        put(out, Box::into_raw(Box::new(WsimtSentence(sentence))))
    })
}

/// # Safety
/// `s` must come from `wsimt_sentence_parse` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn wsimt_sentence_free(s: *mut WsimtSentence) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Token count, or 0 for NULL.
///
/// # Safety
/// `s` must be a live sentence handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn wsimt_sentence_len(s: *const WsimtSentence) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `s` must be a live sentence handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn wsimt_sentence_word_count(s: *const WsimtSentence) -> usize {
    s.as_ref().map_or(0, |s| s.0.word_count())
}

/// Copy the 1-based word-final token indices into `buf`. `out_len` always
/// receives the required length.
///
/// # Safety
/// `buf` must hold `cap` elements; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_sentence_word_ends(
    s: *const WsimtSentence,
    buf: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> WsimtStatus {
    guard(|| copy_out(handle(s, "sentence")?.0.boundaries().ends(), buf, cap, out_len))
}

/// Surface text of the first `tokens` tokens, markers removed.
///
/// # Safety
/// `s` must be a live sentence handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wsimt_sentence_detokenize_prefix(
    s: *const WsimtSentence,
    tokens: usize,
    out: *mut *mut c_char,
) -> WsimtStatus {
    guard(|| {
        let s = handle(s, "sentence")?;
        if tokens > s.0.len() {
            return Err(Error::Index { index: tokens, len: s.0.len() }.into());
        }
        put(out, into_c_string(s.0.detokenize_prefix(tokens))?)
    })
}

/// # Safety
/// `reads` must hold `len` elements and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_schedule_new(
    reads: *const usize,
    len: usize,
    source_len: usize,
    out: *mut *mut WsimtSchedule,
) -> WsimtStatus {
    guard(|| {
        let reads = if len == 0 {
            Vec::new()
        } else if reads.is_null() {
            return Err(null("reads"));
        } else {
            std::slice::from_raw_parts(reads, len).to_vec()
        };
        let schedule = Schedule::new(reads, source_len)?;
        put(out, Box::into_raw(Box::new(WsimtSchedule(schedule))))
    })
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn wsimt_schedule_free(s: *mut WsimtSchedule) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Target length, or 0 for NULL.
///
/// # Safety
/// `s` must be a live schedule handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn wsimt_schedule_len(s: *const WsimtSchedule) -> usize {
    s.as_ref().map_or(0, |s| s.0.target_len())
}

/// `g_i` for 1-based `i`.
///
/// # Safety
/// `s` must be a live schedule handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_schedule_get(s: *const WsimtSchedule, i: usize, out: *mut usize) -> WsimtStatus {
    guard(|| put(out, handle(s, "schedule")?.0.get(i)?))
}

/// # Safety
/// `buf` must hold `cap` elements; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_schedule_reads(
    s: *const WsimtSchedule,
    buf: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> WsimtStatus {
    guard(|| copy_out(handle(s, "schedule")?.0.reads(), buf, cap, out_len))
}

fn boxed(schedule: Schedule) -> *mut WsimtSchedule {
    Box::into_raw(Box::new(WsimtSchedule(schedule)))
}

/// Token-level wait-k over `source_len` source and `target_len` target tokens.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_waitk_token(
    k: usize,
    source_len: usize,
    target_len: usize,
    out: *mut *mut WsimtSchedule,
) -> WsimtStatus {
    guard(|| put(out, boxed(waitk_token(k, source_len, target_len)?)))
}

/// # Safety
/// `src` and `tgt` must be live sentence handles and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_waitk_word(
    k: usize,
    src: *const WsimtSentence,
    tgt: *const WsimtSentence,
    out: *mut *mut WsimtSchedule,
) -> WsimtStatus {
    guard(|| {
        let (src, tgt) = (handle(src, "source")?, handle(tgt, "target")?);
        put(out, boxed(waitk_word(k, src.0.boundaries(), tgt.0.boundaries())?))
    })
}

/// Convert a token-level schedule to its word-level counterpart.
///
/// # Safety
/// All handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_to_word_policy(
    schedule: *const WsimtSchedule,
    src: *const WsimtSentence,
    tgt: *const WsimtSentence,
    out: *mut *mut WsimtSchedule,
) -> WsimtStatus {
    guard(|| {
        let schedule = handle(schedule, "schedule")?;
        let (src, tgt) = (handle(src, "source")?, handle(tgt, "target")?);
        let converted = to_word_policy(&schedule.0, src.0.boundaries(), tgt.0.boundaries())?;
        put(out, boxed(converted.schedule))
    })
}

/// Schedule for a policy string such as `convert:waitk-token:k=3`.
///
/// # Safety
/// `spec` must be NUL-terminated, the handles live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_policy_schedule(
    spec: *const c_char,
    src: *const WsimtSentence,
    tgt: *const WsimtSentence,
    out: *mut *mut WsimtSchedule,
) -> WsimtStatus {
    guard(|| {
        let policy = Policy::parse(str_arg(spec, "spec")?)?;
        let (src, tgt) = (handle(src, "source")?, handle(tgt, "target")?);
        put(out, boxed(policy.schedule(0, src.0.boundaries(), tgt.0.boundaries())?))
    })
}

/// Token-level Average Lagging.
///
/// # Safety
/// `schedule` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_average_lagging(schedule: *const WsimtSchedule, out: *mut f64) -> WsimtStatus {
    guard(|| put(out, average_lagging(&handle(schedule, "schedule")?.0, AlParams::default()).al))
}

/// Word-level Average Lagging.
///
/// # Safety
/// All handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_word_average_lagging(
    schedule: *const WsimtSchedule,
    src: *const WsimtSentence,
    tgt: *const WsimtSentence,
    out: *mut f64,
) -> WsimtStatus {
    guard(|| {
        let schedule = handle(schedule, "schedule")?;
        let (src, tgt) = (handle(src, "source")?, handle(tgt, "target")?);
        let lag = word_average_lagging(&schedule.0, src.0.boundaries(), tgt.0.boundaries(), AlParams::default())?;
        put(out, lag.al)
    })
}

/// Write the n×n intra-word encoder mask row-major into `buf` (1 = may
/// attend). `buf` must hold `n * n` bytes where `n` is the token count.
///
/// # Safety
/// `src` must be live and `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn wsimt_intra_word_mask(src: *const WsimtSentence, buf: *mut u8, cap: usize) -> WsimtStatus {
    guard(|| {
        let src = handle(src, "source")?;
        let mask = intra_word_mask(src.0.boundaries());
        let n = src.0.len();
        if cap < n * n {
            return Err(Fail(
                WsimtStatus::BufferTooSmall,
                format!("need {} bytes, buffer holds {cap}", n * n),
            ));
        }
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let out = std::slice::from_raw_parts_mut(buf, n * n);
        for i in 1..=n {
            for (j, cell) in out[(i - 1) * n..i * n].iter_mut().enumerate() {
                *cell = u8::from(mask.allows(i, j + 1));
            }
        }
        Ok(())
    })
}

/// Evaluate a corpus given as newline-separated texts and return the JSON
/// report. `reference` and `alignment` may be NULL.
///
/// # Safety
/// Non-NULL string arguments must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wsimt_evaluate_json(
    source: *const c_char,
    hypothesis: *const c_char,
    reference: *const c_char,
    alignment: *const c_char,
    policy: *const c_char,
    workers: usize,
    out: *mut *mut c_char,
) -> WsimtStatus {
    guard(|| {
        let optional = |p: *const c_char, what: &str| -> Result<Option<&str>, Fail> {
            if p.is_null() {
                Ok(None)
            } else {
                str_arg(p, what).map(Some)
            }
        };
        let text = CorpusText {
            source: str_arg(source, "source")?,
            hypothesis: Some(str_arg(hypothesis, "hypothesis")?),
            reference: optional(reference, "reference")?,
            alignment: optional(alignment, "alignment")?,
        };
        let entries = parse_corpus(text, MarkerConvention::Suffix)?;
        let mut config = EvalConfig::new(Policy::parse(str_arg(policy, "policy")?)?);
        config.workers = workers.max(1);
        let eval = evaluate_corpus(&entries, &config)?;
        let json = serde_json::to_string(&eval).map_err(|e| Fail(WsimtStatus::InvalidParameter, e.to_string()))?;
        put(out, into_c_string(json)?)
    })
}
