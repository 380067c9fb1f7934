//! C ABI for the commitgen toolkit.
//!
//! Handles are opaque pointers created by the `*_load` functions and
//! released by the matching `*_free`. Every fallible call returns a
//! [`CgStatus`]; on failure the thread-local message from
//! [`cg_last_error_message`] describes what happened. Strings returned to
//! the caller are NUL-terminated UTF-8 owned by the caller (release with
//! [`cg_string_free`]), id buffers with [`cg_ids_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use commitgen::corpus::entry_from_modifications;
use commitgen::decode::{generate_candidates, DecodeConfig};
use commitgen::diff::modifications_from_diff;
use commitgen::model::{load_checkpoint, InputMode, ModelConfig, ModelParameters};
use commitgen::tokenizer::Vocabulary;
use commitgen::Error;
use libc::{c_char, c_uint};

/// Result codes for every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Ok = 0,
    /// A required pointer was null or an argument was out of range.
    InvalidArgument = 1,
    /// Input text could not be parsed (diffs, vocab files).
    ParseError = 2,
    /// Structurally valid input with unusable content.
    DataError = 3,
    IoError = 4,
    /// Checkpoint/vocabulary shape disagreement.
    ShapeError = 5,
    /// Unexpected internal failure (including caught panics).
    InternalError = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let cleaned = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).ok();
    });
}

fn status_of(err: &Error) -> CgStatus {
    match err {
        Error::Parse { .. } => CgStatus::ParseError,
        Error::Data(_) | Error::Train(_) => CgStatus::DataError,
        Error::Shape(_) => CgStatus::ShapeError,
        Error::Io(_) | Error::Repo { .. } => CgStatus::IoError,
        Error::Json(_) => CgStatus::ParseError,
    }
}

fn fail(err: &Error) -> CgStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guard<F: FnOnce() -> CgStatus>(f: F) -> CgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            CgStatus::InternalError
        }
    }
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string for the duration of
/// the call.
unsafe fn required_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, CgStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} must not be null"));
        return Err(CgStatus::InvalidArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_error(&format!("{what} is not valid UTF-8"));
            Err(CgStatus::InvalidArgument)
        }
    }
}

fn string_out(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn cg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread, or null.
/// The caller owns the returned string (free with [`cg_string_free`]).
#[no_mangle]
pub extern "C" fn cg_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must have been returned by a commitgen function and not freed yet.
#[no_mangle]
pub unsafe extern "C" fn cg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Frees an id buffer returned by [`cg_vocab_encode`]. Null is a no-op.
///
/// # Safety
/// `ids`/`len` must come from a commitgen function and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn cg_ids_free(ids: *mut c_uint, len: usize) {
    if !ids.is_null() {
        drop(Vec::from_raw_parts(ids, len, len));
    }
}

/// Opaque trained vocabulary handle.
pub struct CgVocab {
    inner: Vocabulary,
}

/// Opaque model handle: checkpoint parameters plus their configuration.
pub struct CgModel {
    config: ModelConfig,
    params: ModelParameters,
    vocab_hash: u64,
}

/// Loads a vocabulary directory (merges.txt + vocab.txt).
///
/// # Safety
/// `dir` must be a valid NUL-terminated path; `out` must be a valid
/// pointer-to-pointer.
#[no_mangle]
pub unsafe extern "C" fn cg_vocab_load(dir: *const c_char, out: *mut *mut CgVocab) -> CgStatus {
    guard(|| {
        if out.is_null() {
            set_error("out must not be null");
            return CgStatus::InvalidArgument;
        }
        let dir = match required_str(dir, "dir") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match Vocabulary::load(Path::new(dir)) {
            Ok(vocab) => {
                *out = Box::into_raw(Box::new(CgVocab { inner: vocab }));
                CgStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `vocab` must be null or a live handle from [`cg_vocab_load`].
#[no_mangle]
pub unsafe extern "C" fn cg_vocab_free(vocab: *mut CgVocab) {
    if !vocab.is_null() {
        drop(Box::from_raw(vocab));
    }
}

/// Total vocabulary size (specials + bytes + merges); 0 for null.
///
/// # Safety
/// `vocab` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_vocab_size(vocab: *const CgVocab) -> usize {
    vocab.as_ref().map_or(0, |v| v.inner.size())
}

/// Stable hash binding checkpoints to the vocabulary they were trained with.
///
/// # Safety
/// `vocab` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_vocab_hash(vocab: *const CgVocab) -> u64 {
    vocab.as_ref().map_or(0, |v| v.inner.hash())
}

/// Encodes UTF-8 text into token ids. The buffer written to `out_ids` /
/// `out_len` is owned by the caller (free with [`cg_ids_free`]).
///
/// # Safety
/// All pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cg_vocab_encode(
    vocab: *const CgVocab,
    text: *const c_char,
    out_ids: *mut *mut c_uint,
    out_len: *mut usize,
) -> CgStatus {
    guard(|| {
        let Some(vocab) = vocab.as_ref() else {
            set_error("vocab must not be null");
            return CgStatus::InvalidArgument;
        };
        if out_ids.is_null() || out_len.is_null() {
            set_error("out_ids and out_len must not be null");
            return CgStatus::InvalidArgument;
        }
        let text = match required_str(text, "text") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let ids = vocab.inner.encode(text);
        let mut ids = std::mem::ManuallyDrop::new(ids);
        *out_len = ids.len();
        *out_ids = ids.as_mut_ptr();
        CgStatus::Ok
    })
}

/// Decodes token ids back to text (specials stripped).
///
/// # Safety
/// `ids` must point to `len` readable u32 values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cg_vocab_decode(
    vocab: *const CgVocab,
    ids: *const c_uint,
    len: usize,
    out: *mut *mut c_char,
) -> CgStatus {
    guard(|| {
        let Some(vocab) = vocab.as_ref() else {
            set_error("vocab must not be null");
            return CgStatus::InvalidArgument;
        };
        if out.is_null() || (ids.is_null() && len > 0) {
            set_error("ids and out must not be null");
            return CgStatus::InvalidArgument;
        }
        let ids = if len == 0 {
            &[]
        } else {
            std::slice::from_raw_parts(ids, len)
        };
        match vocab.inner.decode(ids) {
            Ok(text) => {
                *out = string_out(text);
                CgStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Loads a model checkpoint.
///
/// # Safety
/// `path` must be a valid NUL-terminated path; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cg_model_load(path: *const c_char, out: *mut *mut CgModel) -> CgStatus {
    guard(|| {
        if out.is_null() {
            set_error("out must not be null");
            return CgStatus::InvalidArgument;
        }
        let path = match required_str(path, "path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match load_checkpoint(Path::new(path)) {
            Ok(stored) => {
                *out = Box::into_raw(Box::new(CgModel {
                    config: stored.config,
                    params: stored.params,
                    vocab_hash: stored.vocab_hash,
                }));
                CgStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `model` must be null or a live handle from [`cg_model_load`].
#[no_mangle]
pub unsafe extern "C" fn cg_model_free(model: *mut CgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Hash of the vocabulary the model was trained with; 0 for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cg_model_vocab_hash(model: *const CgModel) -> u64 {
    model.as_ref().map_or(0, |m| m.vocab_hash)
}

/// Parses a unified git diff and returns the changed lines per file as a
/// JSON document: {"files": [{"path", "language", "added", "deleted"}],
/// "skipped": [{"path", "reason"}]}.
///
/// # Safety
/// `diff_text` must be NUL-terminated; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cg_diff_changed_lines(
    diff_text: *const c_char,
    out_json: *mut *mut c_char,
) -> CgStatus {
    guard(|| {
        if out_json.is_null() {
            set_error("out_json must not be null");
            return CgStatus::InvalidArgument;
        }
        let text = match required_str(diff_text, "diff_text") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let mods = match modifications_from_diff(text) {
            Ok(mods) => mods,
            Err(e) => return fail(&e),
        };
        let files: Vec<serde_json::Value> = mods
            .modifications
            .iter()
            .map(|m| {
                serde_json::json!({
                    "path": m.file_path,
                    "language": m.language,
                    "added": m.added,
                    "deleted": m.deleted,
                })
            })
            .collect();
        let skipped: Vec<serde_json::Value> = mods
            .skipped
            .iter()
            .map(|s| {
                serde_json::json!({
                    "path": s.path,
                    "reason": format!("{:?}", s.reason),
                })
            })
            .collect();
        let doc = serde_json::json!({ "files": files, "skipped": skipped });
        *out_json = string_out(doc.to_string());
        CgStatus::Ok
    })
}

/// Suggests a commit message for a unified diff. `beam_size` 0 means the
/// default (10). The message is written to `out_message` (caller frees).
///
/// # Safety
/// Handles must be live; `diff_text` NUL-terminated; `out_message` valid.
#[no_mangle]
pub unsafe extern "C" fn cg_suggest(
    model: *const CgModel,
    vocab: *const CgVocab,
    diff_text: *const c_char,
    beam_size: usize,
    out_message: *mut *mut c_char,
) -> CgStatus {
    guard(|| {
        let (Some(model), Some(vocab)) = (model.as_ref(), vocab.as_ref()) else {
            set_error("model and vocab must not be null");
            return CgStatus::InvalidArgument;
        };
        if out_message.is_null() {
            set_error("out_message must not be null");
            return CgStatus::InvalidArgument;
        }
        let text = match required_str(diff_text, "diff_text") {
            Ok(s) => s,
            Err(status) => return status,
        };
        if model.vocab_hash != vocab.inner.hash() {
            set_error("checkpoint was trained with a different vocabulary");
            return CgStatus::DataError;
        }
        let mods = match modifications_from_diff(text) {
            Ok(mods) => mods,
            Err(e) => return fail(&e),
        };
        let Some(entry) = entry_from_modifications(&mods) else {
            set_error("no supported code modifications in the diff");
            return CgStatus::DataError;
        };
        let decode = DecodeConfig {
            beam_size: if beam_size == 0 { 10 } else { beam_size },
            max_target_len: model.config.max_target_len,
            length_penalty: 0.0,
        };
        let candidates = generate_candidates(
            &model.params,
            &model.config,
            &entry,
            &vocab.inner,
            InputMode::ChangedLines,
            &decode,
            1,
        );
        match candidates {
            Ok(list) => match list.first() {
                Some(c) => {
                    *out_message = string_out(c.message.clone());
                    CgStatus::Ok
                }
                None => {
                    set_error("beam search returned no candidates");
                    CgStatus::InternalError
                }
            },
            Err(e) => fail(&e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_static_and_non_empty() {
        let v = unsafe { CStr::from_ptr(cg_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }

    #[test]
    fn null_arguments_are_invalid() {
        let status = unsafe { cg_vocab_load(ptr::null(), ptr::null_mut()) };
        assert_eq!(status, CgStatus::InvalidArgument);
        let msg = cg_last_error_message();
        assert!(!msg.is_null());
        unsafe { cg_string_free(msg) };
    }

    #[test]
    fn missing_vocab_dir_reports_io_error() {
        let dir = CString::new("/nonexistent/vocab/dir").unwrap();
        let mut handle: *mut CgVocab = ptr::null_mut();
        let status = unsafe { cg_vocab_load(dir.as_ptr(), &mut handle) };
        assert_eq!(status, CgStatus::IoError);
        assert!(handle.is_null());
    }
}
