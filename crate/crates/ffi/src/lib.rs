//! C ABI over the iconary engine.
//!
//! Conventions:
//! - every fallible call returns an [`IconaryStatus`]; on failure a message
//!   is kept per thread and can be read with [`iconary_last_error_message`];
//! - structured values cross the boundary as UTF-8 JSON in the same shapes
//!   the game schema and wire protocol use;
//! - strings returned through `out` pointers are owned by the caller and
//!   must be released with [`iconary_string_free`];
//! - handles are released with their `_free` function; passing NULL to a
//!   `_free` function is a no-op.
//!
//! Panics never cross the boundary; they come back as `ICONARY_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use iconary::codec::{decode_drawing, encode_drawing, parse_tokens, QuantizationSpec};
use iconary::domain::{Drawing, GuesserView, Phrase, Split};
use iconary::encoder::{describe_drawing, render_drawer_input, render_guesser_input, PhraseStyle};
use iconary::metrics::{icon_f1, sequence_perplexity, soft_win};
use iconary::server::{session_step, session_step_line, Event, Role, Session, SessionContext};
use iconary::IconLibrary;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IconaryStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A JSON argument did not parse into the expected shape.
    InvalidJson = 3,
    /// The arguments were well-formed but not acceptable.
    InvalidArgument = 4,
    /// Drawing token encoding or decoding failed.
    Codec = 5,
    /// Reading a file failed.
    Io = 6,
    /// An internal panic was caught.
    Panic = 7,
}

/// A loaded icon library.
pub struct IconaryLibrary {
    inner: Arc<IconLibrary>,
}

/// One game session driven by the caller's clock.
pub struct IconarySession {
    session: Session,
    ctx: SessionContext,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    // interior NULs would truncate the message; replace them
    let c = CString::new(msg.replace('\0', "\u{FFFD}")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(IconaryStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: IconaryStatus, msg: impl Into<String>) -> FfiResult<T> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, translating failures and panics into a status.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> IconaryStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            IconaryStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            IconaryStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(IconaryStatus::NullPointer, format!("`{name}` is NULL"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| {
        fail(
            IconaryStatus::InvalidUtf8,
            format!("`{name}` is not valid UTF-8"),
        )
    })
}

unsafe fn json_arg<T: DeserializeOwned>(p: *const c_char, name: &str) -> FfiResult<T> {
    let s = str_arg(p, name)?;
    serde_json::from_str(s).or_else(|e| fail(IconaryStatus::InvalidJson, format!("`{name}`: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure(IconaryStatus::NullPointer, format!("`{name}` is NULL")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| Failure(IconaryStatus::NullPointer, format!("`{name}` is NULL")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return fail(IconaryStatus::NullPointer, "`out` is NULL");
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s)
        .or_else(|_| fail(IconaryStatus::InvalidArgument, "result contains a NUL byte"))?;
    if out.is_null() {
        return fail(IconaryStatus::NullPointer, "`out` is NULL");
    }
    out.write(c.into_raw());
    Ok(())
}

unsafe fn write_json(out: *mut *mut c_char, value: &impl Serialize) -> FfiResult<()> {
    let s = serde_json::to_string(value)
        .or_else(|e| fail(IconaryStatus::InvalidArgument, e.to_string()))?;
    write_string(out, s)
}

fn role(r: u32) -> FfiResult<Role> {
    match r {
        0 => Ok(Role::Drawer),
        1 => Ok(Role::Guesser),
        _ => fail(
            IconaryStatus::InvalidArgument,
            format!("role {r}: expected 0 (drawer) or 1 (guesser)"),
        ),
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn iconary_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn iconary_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn iconary_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The icon library compiled into the engine.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iconary_library_bundled(out: *mut *mut IconaryLibrary) -> IconaryStatus {
    guard(|| {
        let lib = Box::new(IconaryLibrary {
            inner: Arc::new(IconLibrary::bundled()),
        });
        write_out(out, Box::into_raw(lib))
    })
}

/// Loads a library manifest (JSON) from `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iconary_library_load(
    path: *const c_char,
    out: *mut *mut IconaryLibrary,
) -> IconaryStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let lib = IconLibrary::load(Path::new(path))
            .or_else(|e| fail(IconaryStatus::Io, format!("{path}: {e}")))?;
        write_out(
            out,
            Box::into_raw(Box::new(IconaryLibrary {
                inner: Arc::new(lib),
            })),
        )
    })
}

/// Number of icons in the library.
///
/// # Safety
/// `lib` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iconary_library_len(
    lib: *const IconaryLibrary,
    out: *mut usize,
) -> IconaryStatus {
    guard(|| write_out(out, handle(lib, "lib")?.inner.icons().len()))
}

/// # Safety
/// `lib` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn iconary_library_free(lib: *mut IconaryLibrary) {
    if !lib.is_null() {
        drop(Box::from_raw(lib));
    }
}

/// Encodes a drawing (game-schema JSON) as space-separated drawing tokens
/// under the default quantization.
///
/// # Safety
/// Pointers must be valid; `drawing_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn iconary_codec_encode(
    lib: *const IconaryLibrary,
    drawing_json: *const c_char,
    out_tokens: *mut *mut c_char,
) -> IconaryStatus {
    guard(|| {
        let lib = handle(lib, "lib")?;
        let drawing: Drawing = json_arg(drawing_json, "drawing_json")?;
        let tokens = encode_drawing(&drawing, &lib.inner, &QuantizationSpec::default())
            .or_else(|e| fail(IconaryStatus::Codec, e.to_string()))?;
        let text = tokens
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ");
        write_string(out_tokens, text)
    })
}

/// Decodes space-separated drawing tokens into drawing JSON with
/// bucket-centre poses.
///
/// # Safety
/// Pointers must be valid; `tokens` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn iconary_codec_decode(
    lib: *const IconaryLibrary,
    tokens: *const c_char,
    round_index: usize,
    out_drawing_json: *mut *mut c_char,
) -> IconaryStatus {
    guard(|| {
        let lib = handle(lib, "lib")?;
        let parsed = parse_tokens(str_arg(tokens, "tokens")?)
            .or_else(|e| fail(IconaryStatus::Codec, e.to_string()))?;
        let drawing = decode_drawing(
            &parsed,
            &lib.inner,
            &QuantizationSpec::default(),
            round_index,
        )
        .or_else(|e| fail(IconaryStatus::Codec, e.to_string()))?;
        write_json(out_drawing_json, &drawing)
    })
}

/// Text description of a drawing, e.g. `3 tree, small dog`.
///
/// # Safety
/// Pointers must be valid; `drawing_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn iconary_describe_drawing(
    lib: *const IconaryLibrary,
    drawing_json: *const c_char,
    out_text: *mut *mut c_char,
) -> IconaryStatus {
    guard(|| {
        let lib = handle(lib, "lib")?;
        let drawing: Drawing = json_arg(drawing_json, "drawing_json")?;
        let text = describe_drawing(&drawing, &lib.inner)
            .or_else(|e| fail(IconaryStatus::InvalidArgument, e.to_string()))?;
        write_string(out_text, text)
    })
}

/// Guesser model input for a guesser view (`{"slots", "drawings",
/// "guesses", "turn", "remaining_seconds"}` JSON). `fill_in_the_blank` selects sentinel runs instead of
/// one `_` per hidden word.
///
/// # Safety
/// Pointers must be valid; `view_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn iconary_render_guesser_input(
    lib: *const IconaryLibrary,
    view_json: *const c_char,
    fill_in_the_blank: bool,
    out_text: *mut *mut c_char,
) -> IconaryStatus {
    guard(|| {
        let lib = handle(lib, "lib")?;
        let view: GuesserView = json_arg(view_json, "view_json")?;
        let style = if fill_in_the_blank {
            PhraseStyle::fill_in_the_blank()
        } else {
            PhraseStyle::Underscore
        };
        let text = render_guesser_input(&view, &lib.inner, &style)
            .or_else(|e| fail(IconaryStatus::InvalidArgument, e.to_string()))?;
        write_string(out_text, text)
    })
}

/// Drawer model input: the phrase with guessed words wrapped in `*`.
///
/// # Safety
/// Pointers must be valid; `phrase_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn iconary_render_drawer_input(
    phrase_json: *const c_char,
    out_text: *mut *mut c_char,
) -> IconaryStatus {
    guard(|| {
        let phrase: Phrase = json_arg(phrase_json, "phrase_json")?;
        write_string(out_text, render_drawer_input(&phrase))
    })
}

/// Best multiset F1 of a drawing against a JSON list of reference drawings.
/// An empty reference list is an invalid argument.
///
/// # Safety
/// Pointers must be valid; JSON arguments NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn iconary_icon_f1(
    model_json: *const c_char,
    references_json: *const c_char,
    out: *mut f64,
) -> IconaryStatus {
    guard(|| {
        let model: Drawing = json_arg(model_json, "model_json")?;
        let refs: Vec<Drawing> = json_arg(references_json, "references_json")?;
        let f1 = icon_f1(&model, &refs).ok_or_else(|| {
            Failure(
                IconaryStatus::InvalidArgument,
                "no reference drawings".into(),
            )
        })?;
        write_out(out, f1)
    })
}

/// Soft win: `guessed[i]` marks a hit at phrase position i; `len` must equal
/// the phrase length.
///
/// # Safety
/// `guessed` must point to `len` booleans; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn iconary_soft_win(
    phrase_json: *const c_char,
    guessed: *const bool,
    len: usize,
    ood_mode: bool,
    out: *mut bool,
) -> IconaryStatus {
    guard(|| {
        let phrase: Phrase = json_arg(phrase_json, "phrase_json")?;
        if guessed.is_null() && len > 0 {
            return fail(IconaryStatus::NullPointer, "`guessed` is NULL");
        }
        if len != phrase.len() {
            return fail(
                IconaryStatus::InvalidArgument,
                format!("{len} flags for a {}-word phrase", phrase.len()),
            );
        }
        let flags = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(guessed, len)
        };
        write_out(out, soft_win(&phrase, flags, ood_mode))
    })
}

/// Perplexity of one token sequence from its per-token natural-log
/// likelihoods.
///
/// # Safety
/// `log_likelihoods` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn iconary_sequence_perplexity(
    log_likelihoods: *const f64,
    len: usize,
    out: *mut f64,
) -> IconaryStatus {
    guard(|| {
        if log_likelihoods.is_null() {
            return fail(IconaryStatus::NullPointer, "`log_likelihoods` is NULL");
        }
        let ll = std::slice::from_raw_parts(log_likelihoods, len);
        let p = sequence_perplexity(ll).ok_or_else(|| {
            Failure(
                IconaryStatus::InvalidArgument,
                "empty or non-finite likelihoods".into(),
            )
        })?;
        write_out(out, p)
    })
}

/// Opens a session for `phrase_json` (game-schema phrase). With a library
/// handle, drawings are checked against it and AI guessers are capped per
/// drawing; `lib` may be NULL.
///
/// # Safety
/// Strings must be NUL-terminated; `lib` NULL or live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn iconary_session_new(
    id: *const c_char,
    phrase_json: *const c_char,
    lib: *const IconaryLibrary,
    out: *mut *mut IconarySession,
) -> IconaryStatus {
    guard(|| {
        let id = str_arg(id, "id")?;
        let phrase: Phrase = json_arg(phrase_json, "phrase_json")?;
        let ctx = match lib.as_ref() {
            Some(l) => SessionContext::with_library(l.inner.clone()),
            None => SessionContext::default(),
        };
        let s = IconarySession {
            session: Session::new(id, phrase.reset()),
            ctx,
        };
        write_out(out, Box::into_raw(Box::new(s)))
    })
}

/// Applies one raw protocol line from `role_id` (0 drawer, 1 guesser) at
/// `at` seconds. `out_messages_json` receives the outbound messages as
/// `[{"to": role, "message": {...}}, ...]`. Rejected lines still succeed:
/// the rejection is one of the messages.
///
/// # Safety
/// Pointers must be valid; `line` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn iconary_session_step(
    session: *mut IconarySession,
    at: f64,
    role_id: u32,
    line: *const c_char,
    out_messages_json: *mut *mut c_char,
) -> IconaryStatus {
    guard(|| {
        let s = handle_mut(session, "session")?;
        let from = role(role_id)?;
        let line = str_arg(line, "line")?;
        if !at.is_finite() {
            return fail(IconaryStatus::InvalidArgument, "`at` must be finite");
        }
        let (next, out) = session_step_line(&s.session, at, from, line, &s.ctx);
        write_json(out_messages_json, &out)?;
        s.session = next;
        Ok(())
    })
}

/// Advances the session clock to `at` without a message (ends the game on
/// timeout).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn iconary_session_tick(
    session: *mut IconarySession,
    at: f64,
    out_messages_json: *mut *mut c_char,
) -> IconaryStatus {
    guard(|| {
        let s = handle_mut(session, "session")?;
        if !at.is_finite() {
            return fail(IconaryStatus::InvalidArgument, "`at` must be finite");
        }
        let (next, out) = session_step(&s.session, at, &Event::Tick, &s.ctx);
        write_json(out_messages_json, &out)?;
        s.session = next;
        Ok(())
    })
}

/// Whether the game has ended.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn iconary_session_is_finished(
    session: *const IconarySession,
    out: *mut bool,
) -> IconaryStatus {
    guard(|| write_out(out, handle(session, "session")?.session.outcome.is_some()))
}

/// The session as a game-schema record. `split` is a split name such as
/// `train`.
///
/// # Safety
/// Pointers must be valid; `split` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn iconary_session_record(
    session: *const IconarySession,
    split: *const c_char,
    out_record_json: *mut *mut c_char,
) -> IconaryStatus {
    guard(|| {
        let s = handle(session, "session")?;
        let split: Split = str_arg(split, "split")?
            .parse()
            .or_else(|e: String| fail(IconaryStatus::InvalidArgument, e))?;
        write_json(out_record_json, &s.session.to_record(split))
    })
}

/// # Safety
/// `session` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn iconary_session_free(session: *mut IconarySession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_are_per_thread_and_cleared_on_success() {
        let mut n = 0usize;
        assert_eq!(
            unsafe { iconary_library_len(std::ptr::null(), &mut n) },
            IconaryStatus::NullPointer
        );
        assert!(!iconary_last_error_message().is_null());
        std::thread::spawn(|| assert!(iconary_last_error_message().is_null()))
            .join()
            .unwrap();
        let mut lib = std::ptr::null_mut();
        assert_eq!(
            unsafe { iconary_library_bundled(&mut lib) },
            IconaryStatus::Ok
        );
        assert!(iconary_last_error_message().is_null());
        unsafe { iconary_library_free(lib) };
    }

    #[test]
    fn panics_are_caught() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, IconaryStatus::Panic);
        let msg = unsafe { CStr::from_ptr(iconary_last_error_message()) }
            .to_str()
            .unwrap();
        assert_eq!(msg, "internal panic: boom");
    }

    #[test]
    fn nul_bytes_in_messages_are_replaced() {
        set_error("a\0b");
        let msg = unsafe { CStr::from_ptr(iconary_last_error_message()) }
            .to_str()
            .unwrap();
        assert_eq!(msg, "a\u{FFFD}b");
    }
}
