//! C ABI over the texting classifier.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Every fallible call returns a
//! [`TextingStatus`]; on failure the thread-local message from
//! [`texting_last_error_message`] describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use texting::corpus::{clean_and_tokenize, EmbeddingTable, StopWords};
use texting::graphs::{batch_graphs, build_graph, normalize_adjacency};
use texting::model::{forward_eval, load_checkpoint, Checkpoint};
use texting::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextingStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Checkpoint = 4,
    BufferTooSmall = 5,
    DimensionMismatch = 6,
    InvalidArgument = 7,
    EmptyDocument = 8,
    /// A Rust panic was caught at the boundary.
    Internal = 9,
}

/// Trained classifier loaded from a checkpoint directory.
pub struct TextingModel {
    ckpt: Checkpoint,
    class_names: Vec<CString>,
}

/// Word vectors; unknown words get deterministic small random vectors.
pub struct TextingEmbeddings {
    table: EmbeddingTable,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

static VERSION: &CStr =
    match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> TextingStatus {
    match e {
        Error::Io { .. } | Error::MissingFile(_) | Error::NoEmbeddings(_) => TextingStatus::Io,
        Error::Checkpoint(_) | Error::Json(_) => TextingStatus::Checkpoint,
        Error::DimensionMismatch { .. } => TextingStatus::DimensionMismatch,
        Error::EmptyGraph(_) | Error::EmptyDocument { .. } => TextingStatus::EmptyDocument,
        _ => TextingStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (TextingStatus, String)>) -> TextingStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TextingStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TextingStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (TextingStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TextingStatus, String)> {
    if p.is_null() {
        return Err((TextingStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            TextingStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

fn null(what: &str) -> (TextingStatus, String) {
    (TextingStatus::NullPointer, format!("{what} is null"))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn texting_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Message describing the last failure on this thread; empty if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn texting_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a checkpoint directory into `*out`.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn texting_model_load(
    dir: *const c_char,
    out: *mut *mut TextingModel,
) -> TextingStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        let ckpt = load_checkpoint(&dir).map_err(lib_err)?;
        let class_names = ckpt
            .classes
            .iter()
            .map(|c| CString::new(c.replace('\0', " ")).unwrap_or_default())
            .collect();
        *out = Box::into_raw(Box::new(TextingModel { ckpt, class_names }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`texting_model_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn texting_model_free(model: *mut TextingModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of classes, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn texting_model_num_classes(model: *const TextingModel) -> usize {
    model.as_ref().map_or(0, |m| m.class_names.len())
}

/// Name of class `index`, owned by the model; null when out of range.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn texting_model_class_name(
    model: *const TextingModel,
    index: usize,
) -> *const c_char {
    model
        .as_ref()
        .and_then(|m| m.class_names.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Input vector size the model expects from its embeddings.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn texting_model_input_dim(model: *const TextingModel) -> usize {
    model.as_ref().map_or(0, |m| m.ckpt.hyper.input_dim)
}

/// OOV seed the model was trained with.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn texting_model_oov_seed(model: *const TextingModel) -> u64 {
    model.as_ref().map_or(0, |m| m.ckpt.oov_seed)
}

/// Class probabilities for one raw document, written to `out_probs[0..len]`.
///
/// The text is lowercased and split on whitespace; with `remove_stopwords`
/// non-zero the shipped English stopword list is dropped first. `len` must
/// be at least the number of classes.
///
/// # Safety
/// Handles must be live, `text` NUL-terminated and `out_probs` valid for
/// `len` writes.
#[no_mangle]
pub unsafe extern "C" fn texting_model_predict(
    model: *const TextingModel,
    embeddings: *const TextingEmbeddings,
    text: *const c_char,
    remove_stopwords: i32,
    out_probs: *mut f32,
    len: usize,
) -> TextingStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let emb = embeddings.as_ref().ok_or_else(|| null("embeddings"))?;
        let text = str_arg(text, "text")?;
        if out_probs.is_null() {
            return Err(null("out_probs"));
        }
        let classes = model.class_names.len();
        if len < classes {
            return Err((
                TextingStatus::BufferTooSmall,
                format!("buffer holds {len} values, model has {classes} classes"),
            ));
        }
        let hyper = &model.ckpt.hyper;
        if emb.table.dimension() != hyper.input_dim {
            return Err(lib_err(Error::DimensionMismatch {
                expected: hyper.input_dim,
                got: emb.table.dimension(),
            }));
        }
        let stop = (remove_stopwords != 0).then(StopWords::default);
        let tokens = clean_and_tokenize(text, stop.as_ref());
        let graph = build_graph(&tokens, hyper.window, &emb.table).map_err(lib_err)?;
        let graph = normalize_adjacency(&graph, hyper.normalization, hyper.self_loops);
        let batch = batch_graphs::<f32>(&[&graph]).map_err(lib_err)?;
        let trace = forward_eval(&batch, &model.ckpt.params, hyper).map_err(lib_err)?;
        let out = std::slice::from_raw_parts_mut(out_probs, classes);
        for (o, p) in out.iter_mut().zip(trace.probabilities.row(0)) {
            *o = *p;
        }
        Ok(())
    })
}

/// Embeddings with no known words: every lookup is a seeded random vector.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn texting_embeddings_random(
    dimension: usize,
    oov_seed: u64,
    out: *mut *mut TextingEmbeddings,
) -> TextingStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if dimension == 0 {
            return Err((
                TextingStatus::InvalidArgument,
                "dimension must be positive".into(),
            ));
        }
        let table = EmbeddingTable::random(dimension, oov_seed);
        *out = Box::into_raw(Box::new(TextingEmbeddings { table }));
        Ok(())
    })
}

/// Loads a whitespace-separated word vector file of the given dimension.
///
/// # Safety
/// `path` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn texting_embeddings_load(
    path: *const c_char,
    dimension: usize,
    oov_seed: u64,
    out: *mut *mut TextingEmbeddings,
) -> TextingStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = PathBuf::from(str_arg(path, "path")?);
        let table = EmbeddingTable::load(&path, dimension, oov_seed, None).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(TextingEmbeddings { table }));
        Ok(())
    })
}

/// # Safety
/// `embeddings` must come from a `texting_embeddings_*` constructor and not
/// be freed twice.
#[no_mangle]
pub unsafe extern "C" fn texting_embeddings_free(embeddings: *mut TextingEmbeddings) {
    if !embeddings.is_null() {
        drop(Box::from_raw(embeddings));
    }
}
