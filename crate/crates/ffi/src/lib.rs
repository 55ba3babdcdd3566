//! C ABI over the solver.
//!
//! Instances and reports cross the boundary as opaque handles that the caller
//! releases with the matching `*_free` function. Every entry point returns a
//! [`PraeStatus`]; on failure [`prae_last_error_message`] describes the cause.
//! Panics are caught at the boundary and reported as [`PraeStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use prae::generator::PuzzleInstance;
use prae::harness::{solve, SolveOptions};
use prae::render::{render_panel, RenderOptions};
use prae::selection::AnswerReport;

/// Number of answer candidates per puzzle.
pub const PRAE_CANDIDATES: usize = 8;

/// Number of context panels per puzzle.
pub const PRAE_CONTEXT_PANELS: usize = 8;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PraeStatus {
    Ok = 0,
    NullPointer = 1,
    /// The call broke an input contract: unknown configuration, ε out of range, bad index.
    InvalidArgument = 2,
    /// Malformed instance data or an unsolvable puzzle.
    DataError = 3,
    IoError = 4,
    /// The output buffer is too small.
    BufferTooSmall = 5,
    Panic = 6,
}

/// A generated or loaded puzzle.
pub struct PraeInstance(PuzzleInstance);

/// The answer report of one solve.
pub struct PraeReport(AnswerReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(PraeStatus, String);

impl From<prae::Error> for Failure {
    fn from(e: prae::Error) -> Self {
        let status = match e {
            prae::Error::Contract(_) => PraeStatus::InvalidArgument,
            prae::Error::Io { .. } => PraeStatus::IoError,
            _ => PraeStatus::DataError,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: PraeStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PraeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            PraeStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("panic: {msg}"));
            PraeStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(PraeStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(PraeStatus::NullPointer, format!("{what} is null")))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(PraeStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PraeStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn prae_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Generates the instance for `config` (e.g. `"2x2Grid"`) and `seed`.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prae_instance_generate(
    config: *const c_char,
    seed: u64,
    out: *mut *mut PraeInstance,
) -> PraeStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let config = string(config, "config")?.parse()?;
        let inst = prae::generator::generate(config, seed)?;
        *out = Box::into_raw(Box::new(PraeInstance(inst)));
        Ok(())
    })
}

/// Parses and validates an instance from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prae_instance_from_json(json: *const c_char, out: *mut *mut PraeInstance) -> PraeStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inst = PuzzleInstance::from_json(string(json, "json")?)?;
        *out = Box::into_raw(Box::new(PraeInstance(inst)));
        Ok(())
    })
}

/// Serializes an instance to JSON. Release the string with [`prae_string_free`].
///
/// # Safety
/// `instance` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prae_instance_to_json(instance: *const PraeInstance, out: *mut *mut c_char) -> PraeStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inst = deref(instance, "instance")?;
        let text = CString::new(inst.0.to_json())
            .map_err(|_| fail(PraeStatus::DataError, "instance JSON contains NUL"))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// Index of the correct candidate.
///
/// # Safety
/// `instance` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prae_instance_answer_index(instance: *const PraeInstance, out: *mut usize) -> PraeStatus {
    guard(|| {
        *out_ptr(out, "out")? = deref(instance, "instance")?.0.answer_index;
        Ok(())
    })
}

/// Releases an instance. Null is ignored.
///
/// # Safety
/// `instance` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn prae_instance_free(instance: *mut PraeInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn prae_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Solves an instance under symmetric perception noise `epsilon` in [0, 1].
///
/// # Safety
/// `instance` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prae_solve(
    instance: *const PraeInstance,
    epsilon: f64,
    seed: u64,
    out: *mut *mut PraeReport,
) -> PraeStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inst = deref(instance, "instance")?;
        let options = SolveOptions {
            seed,
            ..SolveOptions::with_epsilon(epsilon)
        };
        let sol = solve(&inst.0, &options)?;
        *out = Box::into_raw(Box::new(PraeReport(sol.report)));
        Ok(())
    })
}

/// Index of the chosen candidate.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prae_report_chosen(report: *const PraeReport, out: *mut usize) -> PraeStatus {
    guard(|| {
        *out_ptr(out, "out")? = deref(report, "report")?.0.chosen;
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(fail(
            PraeStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    if buf.is_null() {
        return Err(fail(PraeStatus::NullPointer, "buffer is null"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Writes the per-candidate divergences (nats, summed over attributes) into `buf`, which must hold
/// [`PRAE_CANDIDATES`] values.
///
/// # Safety
/// `report` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn prae_report_divergences(report: *const PraeReport, buf: *mut f64, len: usize) -> PraeStatus {
    guard(|| copy_out(&deref(report, "report")?.0.divergences, buf, len))
}

/// Writes the candidate probabilities into `buf`, which must hold
/// [`PRAE_CANDIDATES`] values.
///
/// # Safety
/// `report` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn prae_report_answer_probs(report: *const PraeReport, buf: *mut f64, len: usize) -> PraeStatus {
    guard(|| copy_out(&deref(report, "report")?.0.answer_probs, buf, len))
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn prae_report_free(report: *mut PraeReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

fn panel_pgm(inst: &PuzzleInstance, panel: usize) -> Result<Vec<u8>, Failure> {
    let symbol = if panel < PRAE_CONTEXT_PANELS {
        inst.context.get(panel)
    } else {
        inst.candidates.get(panel - PRAE_CONTEXT_PANELS)
    }
    .ok_or_else(|| fail(PraeStatus::InvalidArgument, format!("panel index {panel} out of range")))?;
    Ok(render_panel(symbol, inst.config, &inst.domain, &RenderOptions::default())?.to_pgm())
}

/// Renders panel `panel` as binary PGM. Indices 0..8 are the context panels,
/// 8..16 the candidates. The byte length is always written to `out_len`; if
/// `cap` is too small nothing else is written and `BufferTooSmall` is
/// returned, so a first call with a null buffer queries the size.
///
/// # Safety
/// `instance` must be a live handle, `out_len` a valid pointer and `buf`
/// valid for `cap` writes when `cap` is large enough.
#[no_mangle]
pub unsafe extern "C" fn prae_render_panel_pgm(
    instance: *const PraeInstance,
    panel: usize,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> PraeStatus {
    guard(|| {
        let out_len = out_ptr(out_len, "out_len")?;
        let bytes = panel_pgm(&deref(instance, "instance")?.0, panel)?;
        *out_len = bytes.len();
        if cap < bytes.len() {
            return Err(fail(
                PraeStatus::BufferTooSmall,
                format!("buffer holds {cap} bytes, {} needed", bytes.len()),
            ));
        }
        if buf.is_null() {
            return Err(fail(PraeStatus::NullPointer, "buffer is null"));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// Renders panel `panel` (indexed as in [`prae_render_panel_pgm`]) to a PGM file.
///
/// # Safety
/// `instance` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn prae_render_panel_pgm_file(
    instance: *const PraeInstance,
    panel: usize,
    path: *const c_char,
) -> PraeStatus {
    guard(|| {
        let bytes = panel_pgm(&deref(instance, "instance")?.0, panel)?;
        let path = Path::new(string(path, "path")?);
        std::fs::write(path, bytes).map_err(|e| prae::Error::io(path, e))?;
        Ok(())
    })
}
