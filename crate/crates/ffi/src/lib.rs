//! C interface to the question answering engine.
//!
//! Engines are opaque handles. Every call returns an [`RdrqaStatus`]; results
//! come back as JSON strings owned by the caller and released with
//! [`rdrqa_string_free`]. After a failed call, [`rdrqa_last_error`] describes
//! the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rdrqa::engine::{Engine, EngineError};
use rdrqa::scrdr::RuleDraft;

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdrqaStatus {
    Ok = 0,
    /// A required pointer was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The question, rule or selection was rejected.
    InvalidInput = 3,
    /// Configuration, data files or the stored tree could not be used.
    Setup = 4,
    /// The engine panicked; the handle should be discarded.
    Internal = 5,
}

/// Opaque engine handle.
pub struct RdrqaEngine {
    engine: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(RdrqaStatus, String);

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let status = if e.is_input_error() { RdrqaStatus::InvalidInput } else { RdrqaStatus::Setup };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RdrqaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RdrqaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RdrqaStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(RdrqaStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(RdrqaStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(engine: *const RdrqaEngine) -> Result<&'a Engine, Failure> {
    engine.as_ref().map(|h| &h.engine).ok_or_else(|| Failure(RdrqaStatus::NullArgument, "engine is null".into()))
}

unsafe fn emit<T: serde::Serialize>(value: &T, out: *mut *mut c_char) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(RdrqaStatus::NullArgument, "output pointer is null".into()));
    }
    let json = serde_json::to_string(value).map_err(|e| Failure(RdrqaStatus::Internal, e.to_string()))?;
    *out = CString::new(json).expect("JSON has no nul bytes").into_raw();
    Ok(())
}

fn tagging(pretagged: c_int) -> Option<bool> {
    match pretagged {
        0 => Some(false),
        1 => Some(true),
        _ => None,
    }
}

/// Load an engine from a JSON configuration file. On success `*out` holds a
/// handle to release with [`rdrqa_engine_free`].
///
/// # Safety
/// `config_path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rdrqa_engine_load(config_path: *const c_char, out: *mut *mut RdrqaEngine) -> RdrqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(RdrqaStatus::NullArgument, "output pointer is null".into()));
        }
        let path = text(config_path, "config path")?;
        let engine = Engine::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(RdrqaEngine { engine }));
        Ok(())
    })
}

/// # Safety
/// `engine` must come from [`rdrqa_engine_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rdrqa_engine_free(engine: *mut RdrqaEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Analyze a question: annotations, rule path and representation as JSON.
/// `pretagged` is 1 for word/TAG input, 0 for plain text, anything else to
/// detect it.
///
/// # Safety
/// Pointers must be valid; `question` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn rdrqa_analyze(
    engine: *const RdrqaEngine,
    question: *const c_char,
    pretagged: c_int,
    out_json: *mut *mut c_char,
) -> RdrqaStatus {
    guard(|| {
        let engine = handle(engine)?;
        let analyzed = engine.analyze(text(question, "question")?, tagging(pretagged))?;
        emit(&analyzed, out_json)
    })
}

/// Answer a question. The JSON either carries the answer or a pending
/// clarification with a session and choice id for [`rdrqa_choose`].
///
/// # Safety
/// Pointers must be valid; `question` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn rdrqa_answer(
    engine: *const RdrqaEngine,
    question: *const c_char,
    pretagged: c_int,
    out_json: *mut *mut c_char,
) -> RdrqaStatus {
    guard(|| {
        let engine = handle(engine)?;
        let outcome = engine.answer(text(question, "question")?, tagging(pretagged))?;
        emit(&outcome, out_json)
    })
}

/// Resolve a pending clarification.
///
/// # Safety
/// Pointers must be valid and strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn rdrqa_choose(
    engine: *const RdrqaEngine,
    session: *const c_char,
    choice_id: *const c_char,
    selection: *const c_char,
    out_json: *mut *mut c_char,
) -> RdrqaStatus {
    guard(|| {
        let engine = handle(engine)?;
        let outcome =
            engine.choose(text(session, "session")?, text(choice_id, "choice id")?, text(selection, "selection")?)?;
        emit(&outcome, out_json)
    })
}

/// Add an exception rule for `question`. `draft_json` holds `rule_text`,
/// `extra`, `conclusion` and optionally `id`. With `dry_run` nonzero the
/// tree is left as it was.
///
/// # Safety
/// Pointers must be valid and strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn rdrqa_add_rule(
    engine: *const RdrqaEngine,
    question: *const c_char,
    draft_json: *const c_char,
    dry_run: c_int,
    out_json: *mut *mut c_char,
) -> RdrqaStatus {
    guard(|| {
        let engine = handle(engine)?;
        let draft: RuleDraft = serde_json::from_str(text(draft_json, "draft")?)
            .map_err(|e| Failure(RdrqaStatus::InvalidInput, format!("draft: {e}")))?;
        let insertion = engine.add_rule(text(question, "question")?, None, &draft, dry_run != 0)?;
        emit(&insertion, out_json)
    })
}

/// Node count, depth and histograms of the tree as JSON.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rdrqa_kb_stats(engine: *const RdrqaEngine, out_json: *mut *mut c_char) -> RdrqaStatus {
    guard(|| emit(&handle(engine)?.kb_stats(), out_json))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rdrqa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn rdrqa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn rdrqa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
