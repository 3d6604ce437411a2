//! C ABI over `psg`.
//!
//! Every fallible call returns a [`PsgStatus`] and writes its result through
//! an out-pointer. On failure, [`psg_last_error`] holds a message for the
//! calling thread. Handles are opaque and must be released with their
//! matching `_free` function; strings returned by the library are released
//! with [`psg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use psg::exact::exact_pfunction;
use psg::metrics::{efficiency, error_distance, EfficiencyParams};
use psg::oracle::brute_force_pfunction;
use psg::{estimate_pfunction, Error, GameConfig, PFunction, Rational, SamplingPlan, StrategySpec};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    InvalidStrategy = 4,
    Randomized = 5,
    Unsupported = 6,
    CapExceeded = 7,
    ShapeMismatch = 8,
    OutOfRange = 9,
    Internal = 10,
}

/// A parsed strategy.
pub struct PsgStrategy {
    spec: StrategySpec,
}

/// A P-function grid over budgets `1..=a_max` and winners `0..=n`.
pub struct PsgPFunction {
    grid: PFunction<f64>,
    exact: Option<PFunction<Rational>>,
    margins: Option<Vec<Vec<f64>>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(PsgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidConfig(_) => PsgStatus::InvalidConfig,
            Error::InvalidStrategy(_) => PsgStatus::InvalidStrategy,
            Error::Randomized(_) => PsgStatus::Randomized,
            Error::Unsupported(_) => PsgStatus::Unsupported,
            Error::CapExceeded { .. } => PsgStatus::CapExceeded,
            Error::ShapeMismatch(_) => PsgStatus::ShapeMismatch,
            _ => PsgStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: PsgStatus, msg: &str) -> Failure {
    Failure(status, msg.to_string())
}

/// Runs `f`, turning errors and panics into a status plus a message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PsgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PsgStatus::Internal
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(PsgStatus::NullPointer, &format!("{what} is NULL")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(PsgStatus::NullPointer, "output pointer is NULL"));
    }
    out.write(value);
    Ok(())
}

fn config(boxes: usize, keys: usize, a_max: usize) -> Result<GameConfig, Failure> {
    Ok(GameConfig::new(boxes, keys, a_max)?)
}

fn into_handle(p: PsgPFunction) -> *mut PsgPFunction {
    Box::into_raw(Box::new(p))
}

fn string_out(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn psg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn psg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a strategy string such as `ks0`, `ks:D=3:E=R` or `bs:D=0:I=5:E=B`.
///
/// # Safety
/// `text` must be NULL or a NUL-terminated string; `out` must be NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn psg_strategy_parse(text: *const c_char, out: *mut *mut PsgStrategy) -> PsgStatus {
    guard(|| {
        if text.is_null() {
            return Err(fail(PsgStatus::NullPointer, "strategy text is NULL"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| fail(PsgStatus::InvalidUtf8, "strategy text is not UTF-8"))?;
        let spec: StrategySpec = s.parse()?;
        put(out, Box::into_raw(Box::new(PsgStrategy { spec })))
    })
}

/// Canonical text of a strategy, or NULL. Free with [`psg_string_free`].
///
/// # Safety
/// `strategy` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn psg_strategy_to_string(strategy: *const PsgStrategy) -> *mut c_char {
    match strategy.as_ref() {
        Some(s) => string_out(s.spec.to_string()),
        None => ptr::null_mut(),
    }
}

/// Whether the strategy uses no randomness (and so can go to the oracle).
///
/// # Safety
/// `strategy` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn psg_strategy_is_deterministic(strategy: *const PsgStrategy) -> bool {
    strategy.as_ref().is_some_and(|s| s.spec.is_deterministic())
}

/// # Safety
/// `strategy` must be NULL or a handle from [`psg_strategy_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn psg_strategy_free(strategy: *mut PsgStrategy) {
    if !strategy.is_null() {
        drop(Box::from_raw(strategy));
    }
}

/// Closed-form P-function on `boxes` boxes with `keys` players.
///
/// # Safety
/// `strategy` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psg_pfunction_exact(
    strategy: *const PsgStrategy,
    boxes: usize,
    keys: usize,
    a_max: usize,
    out: *mut *mut PsgPFunction,
) -> PsgStatus {
    guard(|| {
        let s = borrow(strategy, "strategy")?;
        let p = exact_pfunction(&s.spec, &config(boxes, keys, a_max)?)?;
        let handle = PsgPFunction {
            grid: p.to_f64(),
            exact: Some(p),
            margins: None,
        };
        put(out, into_handle(handle))
    })
}

/// Monte Carlo estimate from `samples` placements drawn with `seed`.
///
/// # Safety
/// `strategy` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psg_pfunction_estimate(
    strategy: *const PsgStrategy,
    boxes: usize,
    keys: usize,
    a_max: usize,
    samples: u64,
    seed: u64,
    out: *mut *mut PsgPFunction,
) -> PsgStatus {
    guard(|| {
        let s = borrow(strategy, "strategy")?;
        let e = estimate_pfunction(&s.spec, &config(boxes, keys, a_max)?, &SamplingPlan::new(samples, seed))?;
        let handle = PsgPFunction {
            grid: e.pfunction,
            exact: None,
            margins: Some(e.margins),
        };
        put(out, into_handle(handle))
    })
}

/// Exact P-function by enumerating every placement (small `boxes` only).
///
/// # Safety
/// `strategy` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psg_pfunction_oracle(
    strategy: *const PsgStrategy,
    boxes: usize,
    keys: usize,
    a_max: usize,
    out: *mut *mut PsgPFunction,
) -> PsgStatus {
    guard(|| {
        let s = borrow(strategy, "strategy")?;
        let p = brute_force_pfunction(&s.spec, &config(boxes, keys, a_max)?)?.pfunction;
        let handle = PsgPFunction {
            grid: p.to_f64(),
            exact: Some(p),
            margins: None,
        };
        put(out, into_handle(handle))
    })
}

/// Grid shape: boxes `N`, players `n` and largest budget.
///
/// # Safety
/// `p` must be a live handle; each out-pointer must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn psg_pfunction_shape(
    p: *const PsgPFunction,
    boxes: *mut usize,
    keys: *mut usize,
    a_max: *mut usize,
) -> PsgStatus {
    guard(|| {
        let c = *borrow(p, "pfunction")?.grid.config();
        for (out, v) in [(boxes, c.boxes()), (keys, c.keys()), (a_max, c.max_attempts())] {
            if !out.is_null() {
                out.write(v);
            }
        }
        Ok(())
    })
}

fn check_cell(grid: &PFunction<f64>, a: usize, w: usize) -> Result<(), Failure> {
    if grid.try_get(a, w).is_none() {
        let c = grid.config();
        return Err(fail(
            PsgStatus::OutOfRange,
            &format!("cell (a={a}, w={w}) outside 1..={} x 0..={}", c.max_attempts(), c.keys()),
        ));
    }
    Ok(())
}

/// `P(a, w)` as a double.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psg_pfunction_get(p: *const PsgPFunction, a: usize, w: usize, out: *mut f64) -> PsgStatus {
    guard(|| {
        let p = borrow(p, "pfunction")?;
        check_cell(&p.grid, a, w)?;
        put(out, *p.grid.get(a, w))
    })
}

/// `P(a, w)` as an exact `num/den` string, for closed-form and oracle grids.
/// Free the string with [`psg_string_free`].
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psg_pfunction_get_exact(
    p: *const PsgPFunction,
    a: usize,
    w: usize,
    out: *mut *mut c_char,
) -> PsgStatus {
    guard(|| {
        let p = borrow(p, "pfunction")?;
        check_cell(&p.grid, a, w)?;
        let exact = p
            .exact
            .as_ref()
            .ok_or_else(|| fail(PsgStatus::Unsupported, "grid was estimated, not computed exactly"))?;
        let r = exact.get(a, w);
        put(out, string_out(format!("{}/{}", r.numer(), r.denom())))
    })
}

/// Margin of error of cell `(a, w)`, for Monte Carlo grids.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psg_pfunction_margin(p: *const PsgPFunction, a: usize, w: usize, out: *mut f64) -> PsgStatus {
    guard(|| {
        let p = borrow(p, "pfunction")?;
        check_cell(&p.grid, a, w)?;
        let m = p
            .margins
            .as_ref()
            .ok_or_else(|| fail(PsgStatus::Unsupported, "exact grids carry no margins"))?;
        put(out, m[a - 1][w])
    })
}

/// Minimum-winner view `P^min(a, w) = sum_{w' >= w} P(a, w')` as a new handle.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psg_pfunction_min_view(p: *const PsgPFunction, out: *mut *mut PsgPFunction) -> PsgStatus {
    guard(|| {
        let p = borrow(p, "pfunction")?;
        let handle = PsgPFunction {
            grid: p.grid.min_view(),
            exact: p.exact.as_ref().map(|e| e.min_view()),
            margins: None,
        };
        put(out, into_handle(handle))
    })
}

/// Efficiency with weight exponent `beta`, normalized to the random strategy.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psg_efficiency(p: *const PsgPFunction, beta: f64, out: *mut f64) -> PsgStatus {
    guard(|| {
        let p = borrow(p, "pfunction")?;
        let report = efficiency(&p.grid, &EfficiencyParams::with_beta(beta))?;
        put(out, report.eta)
    })
}

/// Error distance between two grids of the same shape and kind.
///
/// # Safety
/// `p` and `q` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psg_error_distance(p: *const PsgPFunction, q: *const PsgPFunction, out: *mut f64) -> PsgStatus {
    guard(|| {
        let (p, q) = (borrow(p, "first pfunction")?, borrow(q, "second pfunction")?);
        put(out, error_distance(&p.grid, &q.grid)?.epsilon)
    })
}

/// Grid as JSON (with `num/den` strings when exact), or NULL. Free with
/// [`psg_string_free`].
///
/// # Safety
/// `p` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn psg_pfunction_to_json(p: *const PsgPFunction) -> *mut c_char {
    let Some(p) = p.as_ref() else {
        return ptr::null_mut();
    };
    let v = match &p.exact {
        Some(e) => e.to_json(true),
        None => p.grid.to_json(false),
    };
    string_out(serde_json::to_string(&v).unwrap_or_default())
}

/// # Safety
/// `p` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn psg_pfunction_free(p: *mut PsgPFunction) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn psg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
