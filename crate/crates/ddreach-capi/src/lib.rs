//! C ABI over the diagram store and the reachability engine.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `_free` function. Every entry point catches panics, so the
//! library never unwinds across the boundary; failures come back as a
//! status code (or a null pointer) with a message readable through
//! [`ddr_last_error`].
//!
//! Objects are bound to the store that created them. Using a system or a
//! set with a different store, or after freeing its store, is undefined
//! behavior that the library can only partially detect.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Duration;

use ddreach::{
    explicit_oracle, gen_counter, gen_philosophers, parse_tsys, wrap_bad_case, write_tsys,
    Algorithm, Error, RunOptions, StateSet, Store, StoreConfig, TransitionSystem,
};

/// Opaque diagram store: the node arena, unique table and operation cache.
pub struct DdrStore {
    inner: Store,
}

/// Opaque transition system bound to the store that built it.
pub struct DdrSystem {
    inner: TransitionSystem,
}

/// Opaque state set (reachability result) bound to its store.
pub struct DdrSet {
    inner: StateSet,
}

/// Result of every fallible call that does not return a pointer.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DdrStatus {
    /// Success.
    DdrOk = 0,
    /// A required pointer argument was null.
    DdrNullArg = 1,
    /// Invalid argument or model (dimension mismatch, bad support, ...).
    DdrInvalid = 2,
    /// Model text failed to parse; the message carries the line number.
    DdrParse = 3,
    /// The run exceeded its time budget.
    DdrTimeout = 4,
    /// An internal panic was caught at the boundary.
    DdrPanic = 5,
}

/// Algorithm selector for [`ddr_run`]; pass the enum value as `uint32_t`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DdrAlgorithm {
    /// Breadth-first fixpoint over the merged relation.
    DdrAlgBfs = 0,
    /// Recursive fixpoint on binary diagrams.
    DdrAlgReachBdd = 1,
    /// Fork-join parallel recursive fixpoint (binary diagrams).
    DdrAlgReachBddPar = 2,
    /// Recursive fixpoint on multi-valued diagrams.
    DdrAlgReachMdd = 3,
    /// Bottom-up event saturation over the partial relations.
    DdrAlgSaturation = 4,
}

/// Instrumentation of one reachability run. `reach_calls` counts cache-miss
/// entries of the recursive fixpoint; `image_calls` and `union_calls` count
/// the algorithm's own invocation sites; `top_loop_iterations` includes the
/// final confirming pass.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DdrRunStats {
    pub n: u32,
    pub m: u32,
    pub workers: u32,
    pub reach_calls: u64,
    pub image_calls: u64,
    pub union_calls: u64,
    pub top_loop_iterations: u64,
    pub peak_node_count: u64,
    pub wall_time_ms: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DdrStatus {
    match err {
        Error::Timeout => DdrStatus::DdrTimeout,
        Error::Parse { .. } => DdrStatus::DdrParse,
        _ => DdrStatus::DdrInvalid,
    }
}

fn guard_ptr<T>(f: impl FnOnce() -> Result<*mut T, Error>) -> *mut T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(ptr)) => ptr,
        Ok(Err(err)) => {
            set_error(err.to_string());
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic".into());
            std::ptr::null_mut()
        }
    }
}

fn guard_status(f: impl FnOnce() -> Result<(), Error>) -> DdrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DdrStatus::DdrOk,
        Ok(Err(err)) => {
            let status = status_of(&err);
            set_error(err.to_string());
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DdrStatus::DdrPanic
        }
    }
}

fn invalid(msg: &str) -> Error {
    Error::Model(msg.into())
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn ddr_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string; never free it.
#[no_mangle]
pub extern "C" fn ddr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Creates a store for `vars` variables over domain `{0..domain-1}`.
/// `cache_bits` sizes the operation cache at `2^cache_bits` slots; pass 0
/// for the default (the DDREACH_CACHE_BITS environment variable, or 20).
/// Returns null on invalid configuration. Free with [`ddr_store_free`].
#[no_mangle]
pub extern "C" fn ddr_store_new(vars: u32, domain: u32, cache_bits: u32) -> *mut DdrStore {
    guard_ptr(|| {
        let mut config = StoreConfig::new(vars, domain);
        if cache_bits != 0 {
            config = config.cache_bits(cache_bits);
        }
        let inner = Store::new(config)?;
        Ok(Box::into_raw(Box::new(DdrStore { inner })))
    })
}

/// Frees a store. Systems and sets created from it must already be freed.
///
/// # Safety
/// `store` must be a pointer returned by [`ddr_store_new`] that has not been
/// freed, or null (a no-op).
#[no_mangle]
pub unsafe extern "C" fn ddr_store_free(store: *mut DdrStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Total nodes allocated in the store so far; 0 when `store` is null.
///
/// # Safety
/// `store` must be a live store pointer or null.
#[no_mangle]
pub unsafe extern "C" fn ddr_store_num_nodes(store: *const DdrStore) -> u64 {
    if store.is_null() {
        return 0;
    }
    (*store).inner.num_nodes()
}

/// Parses model text in the .tsys format into a system bound to `store`.
/// The store's dimensions must match the `vars`/`domain` header. Returns
/// null on failure. Free with [`ddr_system_free`].
///
/// # Safety
/// `store` must be a live store pointer; `text` must be a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ddr_system_parse(
    store: *const DdrStore,
    text: *const c_char,
) -> *mut DdrSystem {
    if store.is_null() || text.is_null() {
        set_error("null argument".into());
        return std::ptr::null_mut();
    }
    let store = &(*store).inner;
    let text = CStr::from_ptr(text);
    guard_ptr(|| {
        let text = text
            .to_str()
            .map_err(|_| invalid("model text is not UTF-8"))?;
        let inner = parse_tsys(store, text)?;
        Ok(Box::into_raw(Box::new(DdrSystem { inner })))
    })
}

/// Builds the n-bit binary counter model. The store needs at least `n`
/// variables over domain 2. Free with [`ddr_system_free`].
///
/// # Safety
/// `store` must be a live store pointer.
#[no_mangle]
pub unsafe extern "C" fn ddr_system_counter(store: *const DdrStore, n: u32) -> *mut DdrSystem {
    if store.is_null() {
        set_error("null argument".into());
        return std::ptr::null_mut();
    }
    let store = &(*store).inner;
    guard_ptr(|| {
        let inner = gen_counter(store, n)?;
        Ok(Box::into_raw(Box::new(DdrSystem { inner })))
    })
}

/// Builds the dining-philosophers model with `k` seats (3k variables over
/// domain 2). Free with [`ddr_system_free`].
///
/// # Safety
/// `store` must be a live store pointer.
#[no_mangle]
pub unsafe extern "C" fn ddr_system_philosophers(
    store: *const DdrStore,
    k: u32,
) -> *mut DdrSystem {
    if store.is_null() {
        set_error("null argument".into());
        return std::ptr::null_mut();
    }
    let store = &(*store).inner;
    guard_ptr(|| {
        let inner = gen_philosophers(store, k)?;
        Ok(Box::into_raw(Box::new(DdrSystem { inner })))
    })
}

/// Wraps a binary system in the parity guard that defeats subproblem reuse,
/// adding one variable. The store must have room for it. Free with
/// [`ddr_system_free`].
///
/// # Safety
/// `store` and `system` must be live pointers created against each other.
#[no_mangle]
pub unsafe extern "C" fn ddr_system_bad_case(
    store: *const DdrStore,
    system: *const DdrSystem,
) -> *mut DdrSystem {
    if store.is_null() || system.is_null() {
        set_error("null argument".into());
        return std::ptr::null_mut();
    }
    let store = &(*store).inner;
    let system = &(*system).inner;
    guard_ptr(|| {
        let inner = wrap_bad_case(store, system)?;
        Ok(Box::into_raw(Box::new(DdrSystem { inner })))
    })
}

/// Frees a system.
///
/// # Safety
/// `system` must be a pointer returned by a `ddr_system_*` constructor that
/// has not been freed, or null (a no-op).
#[no_mangle]
pub unsafe extern "C" fn ddr_system_free(system: *mut DdrSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Number of state variables of the system; 0 when `system` is null.
///
/// # Safety
/// `system` must be a live system pointer or null.
#[no_mangle]
pub unsafe extern "C" fn ddr_system_vars(system: *const DdrSystem) -> u32 {
    if system.is_null() {
        return 0;
    }
    (*system).inner.vars
}

/// Renders the system in the .tsys format. Returns a heap string to release
/// with [`ddr_string_free`], or null when the system carries no row
/// description.
///
/// # Safety
/// `system` must be a live system pointer.
#[no_mangle]
pub unsafe extern "C" fn ddr_system_write(system: *const DdrSystem) -> *mut c_char {
    if system.is_null() {
        set_error("null argument".into());
        return std::ptr::null_mut();
    }
    let system = &(*system).inner;
    guard_ptr(|| {
        let text = write_tsys(system)?;
        let c = CString::new(text).map_err(|_| invalid("model text contains NUL"))?;
        Ok(c.into_raw())
    })
}

/// Runs one algorithm to the reachability fixpoint. `algorithm` takes a
/// `DdrAlgorithm` value; `workers` only matters for the parallel fixpoint;
/// `timeout_ms <= 0` means no limit. On success `*out_set` receives the
/// reachable set (free with [`ddr_set_free`]) and `*out_stats`, when not
/// null, receives the run's instrumentation.
///
/// # Safety
/// `store` and `system` must be live pointers created against each other;
/// `out_set` must point to writable storage; `out_stats` may be null.
#[no_mangle]
pub unsafe extern "C" fn ddr_run(
    store: *const DdrStore,
    system: *const DdrSystem,
    algorithm: u32,
    workers: u32,
    timeout_ms: f64,
    out_set: *mut *mut DdrSet,
    out_stats: *mut DdrRunStats,
) -> DdrStatus {
    if store.is_null() || system.is_null() || out_set.is_null() {
        set_error("null argument".into());
        return DdrStatus::DdrNullArg;
    }
    let store = &(*store).inner;
    let system = &(*system).inner;
    let out_set = &mut *out_set;
    let out_stats = if out_stats.is_null() {
        None
    } else {
        Some(&mut *out_stats)
    };
    guard_status(move || {
        let alg = match algorithm {
            0 => Algorithm::Bfs,
            1 => Algorithm::ReachBdd,
            2 => Algorithm::ReachBddPar,
            3 => Algorithm::ReachMdd,
            4 => Algorithm::Saturation,
            other => return Err(invalid(&format!("unknown algorithm code {other}"))),
        };
        let opts = RunOptions {
            workers: workers as usize,
            timeout: (timeout_ms > 0.0).then(|| Duration::from_secs_f64(timeout_ms / 1000.0)),
        };
        let (set, stats) = ddreach::run(store, system, alg, &opts)?;
        if let Some(out) = out_stats {
            *out = DdrRunStats {
                n: stats.n,
                m: stats.m,
                workers: stats.workers as u32,
                reach_calls: stats.reach_calls,
                image_calls: stats.image_calls,
                union_calls: stats.union_calls,
                top_loop_iterations: stats.top_loop_iterations,
                peak_node_count: stats.peak_node_count,
                wall_time_ms: stats.wall_time_ms,
            };
        }
        *out_set = Box::into_raw(Box::new(DdrSet { inner: set }));
        Ok(())
    })
}

/// Frees a state set.
///
/// # Safety
/// `set` must be a pointer produced by [`ddr_run`] that has not been freed,
/// or null (a no-op).
#[no_mangle]
pub unsafe extern "C" fn ddr_set_free(set: *mut DdrSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of states in the set as a decimal string (counts can exceed any
/// fixed-width integer). Release with [`ddr_string_free`]; null on error.
///
/// # Safety
/// `store` and `set` must be live pointers created against each other.
#[no_mangle]
pub unsafe extern "C" fn ddr_set_count(
    store: *const DdrStore,
    set: *const DdrSet,
) -> *mut c_char {
    if store.is_null() || set.is_null() {
        set_error("null argument".into());
        return std::ptr::null_mut();
    }
    let store = &(*store).inner;
    let set = &(*set).inner;
    guard_ptr(|| {
        let count = set.count(store)?.to_string();
        let c = CString::new(count).map_err(|_| invalid("count contains NUL"))?;
        Ok(c.into_raw())
    })
}

/// Membership test: 1 when `state` (one value per variable, `len` values)
/// is in the set, 0 when not, -1 on error.
///
/// # Safety
/// `store` and `set` must be live pointers created against each other;
/// `state` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn ddr_set_contains(
    store: *const DdrStore,
    set: *const DdrSet,
    state: *const u8,
    len: usize,
) -> c_int {
    if store.is_null() || set.is_null() || (state.is_null() && len != 0) {
        set_error("null argument".into());
        return -1;
    }
    let store = &(*store).inner;
    let set = &(*set).inner;
    let state = std::slice::from_raw_parts(state, len);
    match catch_unwind(AssertUnwindSafe(|| {
        if len != set.vars as usize {
            return Err(invalid("state length does not match variable count"));
        }
        set.contains(store, state)
    })) {
        Ok(Ok(true)) => 1,
        Ok(Ok(false)) => 0,
        Ok(Err(err)) => {
            set_error(err.to_string());
            -1
        }
        Err(_) => {
            set_error("internal panic".into());
            -1
        }
    }
}

/// Checks a system against the explicit-state oracle (small models only):
/// returns 1 when the oracle's state count matches `expected_count` states
/// of the given set, 0 on mismatch, -1 on error (for example when the state
/// space is too large to enumerate).
///
/// # Safety
/// All pointers must be live and created against each other.
#[no_mangle]
pub unsafe extern "C" fn ddr_oracle_matches(
    store: *const DdrStore,
    system: *const DdrSystem,
    set: *const DdrSet,
) -> c_int {
    if store.is_null() || system.is_null() || set.is_null() {
        set_error("null argument".into());
        return -1;
    }
    let store = &(*store).inner;
    let system = &(*system).inner;
    let set = &(*set).inner;
    match catch_unwind(AssertUnwindSafe(|| -> Result<bool, Error> {
        let oracle = explicit_oracle(store, system)?;
        let got = set.enumerate(store)?;
        Ok(oracle == got)
    })) {
        Ok(Ok(true)) => 1,
        Ok(Ok(false)) => 0,
        Ok(Err(err)) => {
            set_error(err.to_string());
            -1
        }
        Err(_) => {
            set_error("internal panic".into());
            -1
        }
    }
}

/// Frees a string returned by this library.
///
/// # Safety
/// `text` must be a pointer returned by a `ddr_*` function documented to be
/// released here, not yet freed, or null (a no-op).
#[no_mangle]
pub unsafe extern "C" fn ddr_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}
