//! C interface to decoykit.
//!
//! Objects cross the boundary as opaque handles owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns a [`DkStatus`]; on failure the
//! message is kept per thread and read back with [`dk_last_error`]. Panics are caught and
//! reported as [`DkStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use decoykit::anonymize::{ola_search, AnonymizedView, LossMetric};
use decoykit::attribution::{attribute, scan_path, DEFAULT_DELIMITERS};
use decoykit::dataset::{Dataset, Schema};
use decoykit::decoy::{decoy_guess_probability, same_origin, DecoyRegistry, OriginRule};
use decoykit::hierarchy::HierarchySet;
use decoykit::{Error, ErrorClass};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DkStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or an out-of-range argument.
    InvalidArgument = 1,
    /// Input or policy rejected; exit code 2 on the command line.
    Validation = 2,
    /// Capacity, budget or class-size bound exceeded; exit code 3.
    Capacity = 3,
    Io = 4,
    Internal = 5,
}

/// Loaded table plus its schema.
pub struct DkDataset {
    inner: Dataset,
}

pub struct DkHierarchies {
    inner: HierarchySet,
}

/// k-anonymous view of a dataset.
pub struct DkView {
    inner: AnonymizedView,
}

/// Secret decoy registry.
pub struct DkRegistry {
    inner: DecoyRegistry,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(DkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e.class() {
            ErrorClass::Validation => DkStatus::Validation,
            ErrorClass::Capacity => DkStatus::Capacity,
            ErrorClass::Io => DkStatus::Io,
        };
        Fail(status, e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(DkStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DkStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside decoykit");
            DkStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| invalid(&format!("{what} is null")))
}

unsafe fn str_array(p: *const *const c_char, n: usize, what: &str) -> Result<Vec<String>, Fail> {
    if p.is_null() && n > 0 {
        return Err(invalid(&format!("{what} is null")));
    }
    (0..n).map(|i| str_arg(*p.add(i), what).map(str::to_string)).collect()
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn dk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a CSV table validated against a TOML schema.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dk_dataset_load(
    data_path: *const c_char,
    schema_path: *const c_char,
    out: *mut *mut DkDataset,
) -> DkStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let schema = Schema::load(&PathBuf::from(str_arg(schema_path, "schema_path")?))?;
        let inner = Dataset::load(&PathBuf::from(str_arg(data_path, "data_path")?), &schema)?;
        put(out, DkDataset { inner });
        Ok(())
    })
}

/// Number of records, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dk_dataset_len(ds: *const DkDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.len())
}

/// # Safety
/// `ds` must be NULL or a handle from [`dk_dataset_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dk_dataset_free(ds: *mut DkDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Loads a TOML hierarchy file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dk_hierarchies_load(path: *const c_char, out: *mut *mut DkHierarchies) -> DkStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let inner = HierarchySet::load(&PathBuf::from(str_arg(path, "path")?))?;
        put(out, DkHierarchies { inner });
        Ok(())
    })
}

/// # Safety
/// `h` must be NULL or a handle from [`dk_hierarchies_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dk_hierarchies_free(h: *mut DkHierarchies) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Finds the minimal-precision-loss k-anonymous generalization of `ds`. Direct identifiers
/// are dropped first. `suppression` is the maximum share of suppressed records.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dk_anonymize(
    ds: *const DkDataset,
    h: *const DkHierarchies,
    k: usize,
    suppression: f64,
    out: *mut *mut DkView,
) -> DkStatus {
    guard(|| {
        let ds = ref_arg(ds, "dataset")?;
        let h = ref_arg(h, "hierarchies")?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let quasi = h.inner.for_schema(ds.inner.schema())?;
        let inner = ola_search(Arc::new(ds.inner.strip_direct()), &quasi, k, suppression, LossMetric::Precision)?;
        put(out, DkView { inner });
        Ok(())
    })
}

/// # Safety
/// `v` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dk_view_class_count(v: *const DkView) -> usize {
    v.as_ref().map_or(0, |v| v.inner.classes().len())
}

/// # Safety
/// `v` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dk_view_suppressed_count(v: *const DkView) -> usize {
    v.as_ref().map_or(0, |v| v.inner.suppressed().len())
}

/// Copies up to `cap` class sizes into `buf` and returns the number of classes. Call with
/// `cap` 0 to size the buffer.
///
/// # Safety
/// `buf` must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn dk_view_class_sizes(v: *const DkView, buf: *mut usize, cap: usize) -> usize {
    let Some(v) = v.as_ref() else { return 0 };
    let sizes = v.inner.class_sizes();
    if !buf.is_null() {
        ptr::copy_nonoverlapping(sizes.as_ptr(), buf, sizes.len().min(cap));
    }
    sizes.len()
}

/// Copies the level vector, same convention as [`dk_view_class_sizes`].
///
/// # Safety
/// `buf` must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn dk_view_level_vector(v: *const DkView, buf: *mut usize, cap: usize) -> usize {
    let Some(v) = v.as_ref() else { return 0 };
    let levels = v.inner.level_vector().levels();
    if !buf.is_null() {
        ptr::copy_nonoverlapping(levels.as_ptr(), buf, levels.len().min(cap));
    }
    levels.len()
}

/// Writes table.csv and manifest.json into `dir`.
///
/// # Safety
/// `v` must be live; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dk_view_write(v: *const DkView, dir: *const c_char) -> DkStatus {
    guard(|| {
        let v = ref_arg(v, "view")?;
        v.inner.write(&PathBuf::from(str_arg(dir, "dir")?), None)?;
        Ok(())
    })
}

/// # Safety
/// `v` must be NULL or a handle from [`dk_anonymize`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dk_view_free(v: *mut DkView) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// Same-origin test between two generalized tuples over the attributes `attrs`, all of
/// length `n`.
///
/// # Safety
/// `attrs`, `a` and `b` must each point to `n` NUL-terminated strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dk_same_origin(
    h: *const DkHierarchies,
    attrs: *const *const c_char,
    a: *const *const c_char,
    b: *const *const c_char,
    n: usize,
    strict: bool,
    out: *mut bool,
) -> DkStatus {
    guard(|| {
        let h = ref_arg(h, "hierarchies")?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let quasi = h.inner.for_attributes(&str_array(attrs, n, "attrs")?)?;
        let a = str_array(a, n, "a")?;
        let b = str_array(b, n, "b")?;
        let rule = if strict { OriginRule::Strict } else { OriginRule::Inclusive };
        *out = same_origin(&a, &b, &quasi, rule);
        Ok(())
    })
}

/// Chance that a coalition picks a real decoy when guessing uniformly among `n_d + n_e`
/// suspect classes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dk_decoy_guess_probability(n_d: usize, n_e: usize, out: *mut f64) -> DkStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = decoy_guess_probability(n_d, n_e)?;
        Ok(())
    })
}

/// Loads a decoy registry.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dk_registry_load(path: *const c_char, out: *mut *mut DkRegistry) -> DkStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let inner = DecoyRegistry::load(&PathBuf::from(str_arg(path, "path")?))?;
        put(out, DkRegistry { inner });
        Ok(())
    })
}

/// Number of recipients in the registry.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dk_registry_recipient_count(r: *const DkRegistry) -> usize {
    r.as_ref().map_or(0, |r| r.inner.entries.len())
}

/// # Safety
/// `r` must be NULL or a handle from [`dk_registry_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dk_registry_free(r: *mut DkRegistry) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Scans a leaked file and writes the verdict as JSON to `out_json`, to be released with
/// [`dk_string_free`]. `text` selects line-oriented scanning with `delimiters`, NULL for the
/// default set.
///
/// # Safety
/// Handles live, strings NUL-terminated, `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn dk_attribute_leak(
    r: *const DkRegistry,
    leak_path: *const c_char,
    text: bool,
    delimiters: *const c_char,
    floor: f64,
    out_json: *mut *mut c_char,
) -> DkStatus {
    guard(|| {
        let r = ref_arg(r, "registry")?;
        if out_json.is_null() {
            return Err(invalid("out_json is null"));
        }
        if !(0.0..=1.0).contains(&floor) {
            return Err(invalid("floor must lie in [0, 1]"));
        }
        let delims = if delimiters.is_null() {
            DEFAULT_DELIMITERS
        } else {
            str_arg(delimiters, "delimiters")?
        };
        let matches = scan_path(&PathBuf::from(str_arg(leak_path, "leak_path")?), &r.inner, text, delims)?;
        let verdict = attribute(&matches, &r.inner, floor);
        let json = serde_json::to_string(&verdict).map_err(Error::from)?;
        *out_json = CString::new(json).map_err(|_| invalid("verdict contains NUL"))?.into_raw();
        Ok(())
    })
}
