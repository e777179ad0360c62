//! C ABI over the core crate: opaque handles, integer status codes and a
//! thread-local last-error message. The header is generated into
//! `include/beeline.h` at build time.
//!
//! Conventions: every function returns a [`BlStatus`]; results come back
//! through out-pointers; any handle returned by a `_new`/`_load` call must be
//! released with its matching `_free`. All entry points catch panics and turn
//! them into `BL_STATUS_PANIC` instead of unwinding across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use beeline::graph::{prefix_progress, shortest_success_path, Instance, Path, StrategySet};
use beeline::oracle::{
    Oracle, OracleBudget, OracleError, SyntheticOracle, SyntheticOracleConfig, TabularOracle,
};
use beeline::search::{run_search, SearchConfig};
use beeline::trace::SearchStatus;

/// Status code returned by every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlStatus {
    BlStatusOk = 0,
    /// The requested search has no solution (a result, not a failure).
    BlStatusNoSolution = 1,
    BlStatusIoError = 2,
    BlStatusParseError = 3,
    BlStatusInvalidArgument = 4,
    BlStatusBudgetExhausted = 5,
    BlStatusUnavailable = 6,
    /// A provided buffer was too small; the required size is reported
    /// through the relevant out-parameter.
    BlStatusBufferTooSmall = 7,
    BlStatusPanic = 99,
}

/// Terminal state of a search, mirrored into [`BlSearchSummary`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlSearchStatus {
    BlSearchSuccess = 0,
    BlSearchBudgetExhausted = 1,
    BlSearchIterationsExhausted = 2,
}

/// Opaque: a loaded instance (transition table plus optional responses).
pub struct BlInstance {
    inner: Instance,
}

/// Opaque: a scoring oracle.
pub struct BlOracle {
    inner: Box<dyn Oracle>,
    strategy_count: u32,
}

/// Search knobs, one-to-one with the core configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BlSearchConfig {
    pub population_size: usize,
    pub max_iterations: u32,
    pub stagnation_threshold: u32,
    pub tournament_size: usize,
    pub selection_count: usize,
    pub mutation_split: f64,
    pub max_path_length: usize,
    pub init_length_cap: usize,
    pub rng_seed: u64,
}

/// Outcome of one search run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BlSearchSummary {
    pub status: BlSearchStatus,
    /// Best fitness band seen, or -1 when nothing was scored.
    pub best_fitness: i32,
    pub total_queries: u64,
    pub iterations_run: u32,
    /// Steps of the winning path written to the caller's buffer, or -1 when
    /// the search did not succeed.
    pub winning_len: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl std::fmt::Display) {
    let sanitized = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn status_of(error: &OracleError) -> BlStatus {
    match error {
        OracleError::BudgetExhausted { .. } => BlStatus::BlStatusBudgetExhausted,
        OracleError::Unavailable(_) => BlStatus::BlStatusUnavailable,
        OracleError::Parse { .. } | OracleError::InconsistentThreshold { .. } => {
            BlStatus::BlStatusParseError
        }
        OracleError::Io(_) => BlStatus::BlStatusIoError,
        _ => BlStatus::BlStatusInvalidArgument,
    }
}

fn guard(body: impl FnOnce() -> BlStatus + std::panic::UnwindSafe) -> BlStatus {
    match catch_unwind(body) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            BlStatus::BlStatusPanic
        }
    }
}

/// # Safety
/// `ptr` must be a NUL-terminated string valid for the duration of the call.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, BlStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(BlStatus::BlStatusInvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        BlStatus::BlStatusInvalidArgument
    })
}

/// Loads an instance file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bl_instance_load(
    path: *const c_char,
    out: *mut *mut BlInstance,
) -> BlStatus {
    guard(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null out pointer");
            return BlStatus::BlStatusInvalidArgument;
        }
        let path = match read_str(path) {
            Ok(path) => path,
            Err(status) => return status,
        };
        match Instance::load(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(BlInstance { inner }));
                BlStatus::BlStatusOk
            }
            Err(beeline::graph::GraphError::Io(e)) => {
                set_error(e);
                BlStatus::BlStatusIoError
            }
            Err(e) => {
                set_error(e);
                BlStatus::BlStatusParseError
            }
        }
    }))
}

/// Writes the instance in canonical form.
///
/// # Safety
/// `instance` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bl_instance_save(
    instance: *const BlInstance,
    path: *const c_char,
) -> BlStatus {
    guard(AssertUnwindSafe(|| {
        let Some(instance) = instance.as_ref() else {
            set_error("null instance");
            return BlStatus::BlStatusInvalidArgument;
        };
        let path = match read_str(path) {
            Ok(path) => path,
            Err(status) => return status,
        };
        match instance.inner.save(path) {
            Ok(()) => BlStatus::BlStatusOk,
            Err(e) => {
                set_error(e);
                BlStatus::BlStatusIoError
            }
        }
    }))
}

/// # Safety
/// `instance` must be a pointer previously returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn bl_instance_free(instance: *mut BlInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// # Safety
/// `instance` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bl_instance_strategy_count(instance: *const BlInstance) -> u32 {
    instance.as_ref().map_or(0, |i| i.inner.strategy_count)
}

/// # Safety
/// `instance` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bl_instance_threshold(instance: *const BlInstance) -> u32 {
    instance.as_ref().map_or(0, |i| i.inner.threshold)
}

/// Minimum-step success path from the origin. `steps`/`capacity` receive the
/// result; `out_len` reports how many steps were (or would be) written.
///
/// # Safety
/// `instance`, `steps` (for `capacity` elements) and `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_shortest_path(
    instance: *const BlInstance,
    steps: *mut u32,
    capacity: usize,
    out_len: *mut usize,
) -> BlStatus {
    guard(AssertUnwindSafe(|| {
        let Some(instance) = instance.as_ref() else {
            set_error("null instance");
            return BlStatus::BlStatusInvalidArgument;
        };
        if out_len.is_null() {
            set_error("null out_len");
            return BlStatus::BlStatusInvalidArgument;
        }
        let graph = match instance.inner.graph() {
            Ok(graph) => graph,
            Err(e) => {
                set_error(e);
                return BlStatus::BlStatusInvalidArgument;
            }
        };
        match shortest_success_path(&graph) {
            None => {
                *out_len = 0;
                BlStatus::BlStatusNoSolution
            }
            Some(path) => {
                *out_len = path.len();
                if path.len() > capacity {
                    set_error(format!("buffer holds {capacity}, need {}", path.len()));
                    return BlStatus::BlStatusBufferTooSmall;
                }
                if !steps.is_null() {
                    std::ptr::copy_nonoverlapping(path.steps().as_ptr(), steps, path.len());
                }
                BlStatus::BlStatusOk
            }
        }
    }))
}

/// Progress level reached by folding the given steps from the origin.
///
/// # Safety
/// `instance` and `out_level` must be valid; `steps` must hold `len` items.
#[no_mangle]
pub unsafe extern "C" fn bl_prefix_progress(
    instance: *const BlInstance,
    steps: *const u32,
    len: usize,
    out_level: *mut u32,
) -> BlStatus {
    guard(AssertUnwindSafe(|| {
        let Some(instance) = instance.as_ref() else {
            set_error("null instance");
            return BlStatus::BlStatusInvalidArgument;
        };
        if out_level.is_null() || (steps.is_null() && len > 0) {
            set_error("null out pointer");
            return BlStatus::BlStatusInvalidArgument;
        }
        let path = Path::new(std::slice::from_raw_parts(steps, len).to_vec());
        let graph = match instance.inner.graph() {
            Ok(graph) => graph,
            Err(e) => {
                set_error(e);
                return BlStatus::BlStatusInvalidArgument;
            }
        };
        match prefix_progress(&graph, &path) {
            Ok(level) => {
                *out_level = level.0;
                BlStatus::BlStatusOk
            }
            Err(e) => {
                set_error(e);
                BlStatus::BlStatusInvalidArgument
            }
        }
    }))
}

/// Deterministic oracle from an instance that carries response levels.
///
/// # Safety
/// `instance` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bl_oracle_tabular(
    instance: *const BlInstance,
    out: *mut *mut BlOracle,
) -> BlStatus {
    guard(AssertUnwindSafe(|| {
        let Some(instance) = instance.as_ref() else {
            set_error("null instance");
            return BlStatus::BlStatusInvalidArgument;
        };
        if out.is_null() {
            set_error("null out pointer");
            return BlStatus::BlStatusInvalidArgument;
        }
        match TabularOracle::new(&instance.inner) {
            Ok(oracle) => {
                *out = Box::into_raw(Box::new(BlOracle {
                    inner: Box::new(oracle),
                    strategy_count: instance.inner.strategy_count,
                }));
                BlStatus::BlStatusOk
            }
            Err(e) => {
                let status = status_of(&e);
                set_error(e);
                status
            }
        }
    }))
}

/// Seeded stochastic oracle with a constant per-level advance probability.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bl_oracle_synthetic(
    seed: u64,
    advance_prob: f64,
    step_increment: u32,
    threshold: u32,
    noise_prob: f64,
    strategy_count: u32,
    out: *mut *mut BlOracle,
) -> BlStatus {
    guard(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null out pointer");
            return BlStatus::BlStatusInvalidArgument;
        }
        if strategy_count == 0 {
            set_error("strategy_count must be >= 1");
            return BlStatus::BlStatusInvalidArgument;
        }
        let mut config = SyntheticOracleConfig::uniform(seed, advance_prob, step_increment, threshold);
        config.noise_prob = noise_prob;
        match SyntheticOracle::new(config) {
            Ok(oracle) => {
                *out = Box::into_raw(Box::new(BlOracle {
                    inner: Box::new(oracle),
                    strategy_count,
                }));
                BlStatus::BlStatusOk
            }
            Err(e) => {
                let status = status_of(&e);
                set_error(e);
                status
            }
        }
    }))
}

/// # Safety
/// `oracle` must be a pointer previously returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn bl_oracle_free(oracle: *mut BlOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Search preset for smaller targets (3 rounds, paths up to 3, population 5).
#[no_mangle]
pub extern "C" fn bl_search_config_small(seed: u64) -> BlSearchConfig {
    SearchConfig::small(seed).into()
}

/// Search preset for harder targets (5 rounds, paths up to 5, population 10).
#[no_mangle]
pub extern "C" fn bl_search_config_large(seed: u64) -> BlSearchConfig {
    SearchConfig::large(seed).into()
}

impl From<SearchConfig> for BlSearchConfig {
    fn from(config: SearchConfig) -> Self {
        Self {
            population_size: config.population_size,
            max_iterations: config.max_iterations,
            stagnation_threshold: config.stagnation_threshold,
            tournament_size: config.tournament_size,
            selection_count: config.selection_count,
            mutation_split: config.mutation_split,
            max_path_length: config.max_path_length,
            init_length_cap: config.init_length_cap,
            rng_seed: config.rng_seed,
        }
    }
}

impl From<BlSearchConfig> for SearchConfig {
    fn from(config: BlSearchConfig) -> Self {
        Self {
            population_size: config.population_size,
            max_iterations: config.max_iterations,
            stagnation_threshold: config.stagnation_threshold,
            tournament_size: config.tournament_size,
            selection_count: config.selection_count,
            mutation_split: config.mutation_split,
            max_path_length: config.max_path_length,
            init_length_cap: config.init_length_cap,
            rng_seed: config.rng_seed,
        }
    }
}

/// Runs one search against the oracle. On success the winning path's steps
/// are written to `winning_steps` (up to `winning_capacity` entries) and
/// `summary.winning_len` reports the full length.
///
/// # Safety
/// `oracle`, `config` and `summary` must be valid; `winning_steps` must hold
/// `winning_capacity` items (it may be null when the capacity is 0).
#[no_mangle]
pub unsafe extern "C" fn bl_search_run(
    oracle: *const BlOracle,
    config: *const BlSearchConfig,
    budget_max: u64,
    summary: *mut BlSearchSummary,
    winning_steps: *mut u32,
    winning_capacity: usize,
) -> BlStatus {
    guard(AssertUnwindSafe(|| {
        let Some(oracle) = oracle.as_ref() else {
            set_error("null oracle");
            return BlStatus::BlStatusInvalidArgument;
        };
        let (Some(config), Some(summary)) = (config.as_ref(), summary.as_mut()) else {
            set_error("null config or summary");
            return BlStatus::BlStatusInvalidArgument;
        };
        if budget_max == 0 {
            set_error("budget_max must be >= 1");
            return BlStatus::BlStatusInvalidArgument;
        }
        let search_config: SearchConfig = (*config).into();
        let set = StrategySet::with_count(oracle.strategy_count);
        let budget = OracleBudget::new(budget_max);
        let trace = match run_search(&search_config, &set, oracle.inner.as_ref(), &budget) {
            Ok(trace) => trace,
            Err(beeline::search::SearchError::InvalidConfig(msg)) => {
                set_error(msg);
                return BlStatus::BlStatusInvalidArgument;
            }
            Err(beeline::search::SearchError::Oracle(e)) => {
                let status = status_of(&e);
                set_error(e);
                return status;
            }
        };
        summary.status = match trace.summary.status {
            SearchStatus::Success => BlSearchStatus::BlSearchSuccess,
            SearchStatus::BudgetExhausted => BlSearchStatus::BlSearchBudgetExhausted,
            SearchStatus::IterationsExhausted => BlSearchStatus::BlSearchIterationsExhausted,
        };
        summary.best_fitness = trace.summary.best_fitness.map_or(-1, i32::from);
        summary.total_queries = trace.summary.total_queries;
        summary.iterations_run = trace.summary.iterations_run;
        summary.winning_len = -1;
        if let Some(winning) = &trace.summary.winning_path {
            summary.winning_len = winning.len() as i32;
            if winning.len() > winning_capacity {
                set_error(format!(
                    "winning buffer holds {winning_capacity}, need {}",
                    winning.len()
                ));
                return BlStatus::BlStatusBufferTooSmall;
            }
            if !winning_steps.is_null() {
                std::ptr::copy_nonoverlapping(winning.as_ptr(), winning_steps, winning.len());
            }
        }
        BlStatus::BlStatusOk
    }))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
