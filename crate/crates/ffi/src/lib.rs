//! C ABI for the mdfcda solver and simulator.
//!
//! Every fallible function returns an [`MdfcdaStatus`]. On failure a message
//! is available from [`mdfcda_last_error`] on the same thread until the next
//! call into the library. Handles are opaque and must be released with the
//! matching `*_free` function. Prices cross the boundary as integer cents,
//! computed amounts as `double` currency units.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mdfcda::config::ExperimentConfig;
use mdfcda::engine::run_simulation;
use mdfcda::fairness::{fun_l, fun_w};
use mdfcda::metrics::SimulationReport;
use mdfcda::model::{ConsumerBid, ConsumerId, ExtendedConsumerBid, FairnessParams, Money, ProviderBid, ProviderId};
use mdfcda::wdp::{
    dump_instance, parse_instance, solve, Optimality, SolverLimits, SolverMode, WdpInstance, WdpSolution,
};
use mdfcda::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdfcdaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Runtime = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdfcdaSolverMode {
    Exact = 0,
    Heuristic = 1,
    Oracle = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdfcdaOptimality {
    ProvedOptimal = 0,
    Heuristic = 1,
    Oracle = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MdfcdaFairnessParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub max_losses: u32,
}

impl From<MdfcdaFairnessParams> for FairnessParams {
    fn from(p: MdfcdaFairnessParams) -> Self {
        FairnessParams { alpha1: p.alpha1, alpha2: p.alpha2, beta1: p.beta1, beta2: p.beta2, max_losses: p.max_losses }
    }
}

/// Collects bids before an instance is built.
pub struct MdfcdaInstanceBuilder {
    num_types: usize,
    consumers: Vec<ExtendedConsumerBid>,
    providers: Vec<ProviderBid>,
}

pub struct MdfcdaInstance(WdpInstance);

pub struct MdfcdaSolution(WdpSolution);

pub struct MdfcdaReport(SimulationReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MdfcdaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidBid(_)
            | Error::InvalidValue(_)
            | Error::MissingRecord(_)
            | Error::DroppedBidder(_)
            | Error::IncompatiblePrices { .. }
            | Error::RoundMismatch { .. }
            | Error::Parse { .. }
            | Error::OracleTooLarge(_) => MdfcdaStatus::InvalidArgument,
            Error::InvalidConfig(_) | Error::InvalidLimits(_) => MdfcdaStatus::InvalidConfig,
            Error::InvalidAllocation(_)
            | Error::EmptyParticipants
            | Error::NothingOffered
            | Error::ReportMismatch(_) => MdfcdaStatus::Runtime,
            Error::Io { .. } | Error::Json(_) | Error::Csv(_) => MdfcdaStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MdfcdaStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(MdfcdaStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MdfcdaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MdfcdaStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {message}"));
            MdfcdaStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    unsafe { out.write(value) };
    Ok(())
}

fn cents(values: &[i64]) -> Vec<Money> {
    values.iter().map(|&c| Money::from_cents(c)).collect()
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn mdfcda_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn mdfcda_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

#[no_mangle]
pub extern "C" fn mdfcda_default_fairness_params() -> MdfcdaFairnessParams {
    let p = FairnessParams::default();
    MdfcdaFairnessParams {
        alpha1: p.alpha1,
        alpha2: p.alpha2,
        beta1: p.beta1,
        beta2: p.beta2,
        max_losses: p.max_losses,
    }
}

/// Reward factor for a consumer that lost the previous round.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_fun_w(
    losses: u32,
    eval: f64,
    consecutive_losses: u32,
    params: *const MdfcdaFairnessParams,
    out: *mut f64,
) -> MdfcdaStatus {
    guard(|| {
        let params: FairnessParams = (*unsafe { deref(params, "params") }?).into();
        params.validate()?;
        write_out(out, fun_w(losses, eval, consecutive_losses, &params), "out")
    })
}

/// Penalty factor for a consumer that won the previous round.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_fun_l(
    wins: u32,
    eval: f64,
    consecutive_losses: u32,
    params: *const MdfcdaFairnessParams,
    out: *mut f64,
) -> MdfcdaStatus {
    guard(|| {
        let params: FairnessParams = (*unsafe { deref(params, "params") }?).into();
        params.validate()?;
        write_out(out, fun_l(wins, eval, consecutive_losses, &params)?, "out")
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_builder_new(num_types: usize, out: *mut *mut MdfcdaInstanceBuilder) -> MdfcdaStatus {
    guard(|| {
        if num_types == 0 {
            return Err(invalid("num_types must be at least 1"));
        }
        let b = Box::new(MdfcdaInstanceBuilder { num_types, consumers: Vec::new(), providers: Vec::new() });
        write_out(out, Box::into_raw(b), "out")
    })
}

/// Adds a consumer bid. `prices_cents` and `quantities` hold `len` entries,
/// one per resource type. Consumers must be added in ascending id order.
///
/// # Safety
/// `builder` must be a live builder and both arrays must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_builder_add_consumer(
    builder: *mut MdfcdaInstanceBuilder,
    id: u32,
    prices_cents: *const i64,
    quantities: *const u32,
    len: usize,
    fairness_factor: f64,
) -> MdfcdaStatus {
    guard(|| {
        let b = unsafe { deref_mut(builder, "builder") }?;
        let prices = unsafe { slice(prices_cents, len, "prices_cents") }?;
        let qty = unsafe { slice(quantities, len, "quantities") }?;
        let bid = ConsumerBid::new(ConsumerId(id), cents(prices), qty.to_vec())?;
        b.consumers.push(ExtendedConsumerBid::new(bid, fairness_factor)?);
        Ok(())
    })
}

/// Adds a provider bid; same conventions as consumers.
///
/// # Safety
/// `builder` must be a live builder and both arrays must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_builder_add_provider(
    builder: *mut MdfcdaInstanceBuilder,
    id: u32,
    prices_cents: *const i64,
    quantities: *const u32,
    len: usize,
) -> MdfcdaStatus {
    guard(|| {
        let b = unsafe { deref_mut(builder, "builder") }?;
        let prices = unsafe { slice(prices_cents, len, "prices_cents") }?;
        let qty = unsafe { slice(quantities, len, "quantities") }?;
        b.providers.push(ProviderBid::new(ProviderId(id), cents(prices), qty.to_vec())?);
        Ok(())
    })
}

/// Builds an instance from the bids added so far. The builder stays usable.
///
/// # Safety
/// `builder` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_builder_build(
    builder: *const MdfcdaInstanceBuilder,
    out: *mut *mut MdfcdaInstance,
) -> MdfcdaStatus {
    guard(|| {
        let b = unsafe { deref(builder, "builder") }?;
        let inst = WdpInstance::new(b.num_types, b.consumers.clone(), b.providers.clone())?;
        write_out(out, Box::into_raw(Box::new(MdfcdaInstance(inst))), "out")
    })
}

/// # Safety
/// `builder` must be null or a builder not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_builder_free(builder: *mut MdfcdaInstanceBuilder) {
    if !builder.is_null() {
        drop(unsafe { Box::from_raw(builder) });
    }
}

/// Parses an instance from its text dump format.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_instance_parse(text: *const c_char, out: *mut *mut MdfcdaInstance) -> MdfcdaStatus {
    guard(|| {
        let inst = parse_instance(unsafe { string(text, "text") }?)?;
        write_out(out, Box::into_raw(Box::new(MdfcdaInstance(inst))), "out")
    })
}

/// Writes the instance in text dump format; free with [`mdfcda_string_free`].
///
/// # Safety
/// `instance` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_instance_dump(instance: *const MdfcdaInstance, out: *mut *mut c_char) -> MdfcdaStatus {
    guard(|| {
        let inst = unsafe { deref(instance, "instance") }?;
        let text = CString::new(dump_instance(&inst.0)).map_err(|e| invalid(e.to_string()))?;
        write_out(out, text.into_raw(), "out")
    })
}

/// # Safety
/// `instance` must be live.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_instance_num_consumers(instance: *const MdfcdaInstance) -> usize {
    unsafe { instance.as_ref() }.map_or(0, |i| i.0.num_consumers())
}

/// # Safety
/// `instance` must be null or an instance not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_instance_free(instance: *mut MdfcdaInstance) {
    if !instance.is_null() {
        drop(unsafe { Box::from_raw(instance) });
    }
}

/// Solves winner determination. A zero limit selects the default.
///
/// # Safety
/// `instance` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_solve(
    instance: *const MdfcdaInstance,
    mode: MdfcdaSolverMode,
    time_limit_ms: u64,
    node_limit: u64,
    out: *mut *mut MdfcdaSolution,
) -> MdfcdaStatus {
    guard(|| {
        let inst = unsafe { deref(instance, "instance") }?;
        let mut limits = SolverLimits::default();
        if time_limit_ms > 0 {
            limits.time_limit_ms = time_limit_ms;
        }
        if node_limit > 0 {
            limits.node_limit = node_limit;
        }
        let mode = match mode {
            MdfcdaSolverMode::Exact => SolverMode::Exact,
            MdfcdaSolverMode::Heuristic => SolverMode::Heuristic,
            MdfcdaSolverMode::Oracle => SolverMode::Oracle,
        };
        let solution = solve(&inst.0, mode, &limits)?;
        write_out(out, Box::into_raw(Box::new(MdfcdaSolution(solution))), "out")
    })
}

/// # Safety
/// `solution` must be live.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_solution_objective(solution: *const MdfcdaSolution) -> f64 {
    unsafe { solution.as_ref() }.map_or(f64::NAN, |s| s.0.objective)
}

/// # Safety
/// `solution` must be live.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_solution_total_utility(solution: *const MdfcdaSolution) -> f64 {
    unsafe { solution.as_ref() }.map_or(f64::NAN, |s| s.0.total_utility.to_f64())
}

/// # Safety
/// `solution` must be live.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_solution_gap_bound(solution: *const MdfcdaSolution) -> f64 {
    unsafe { solution.as_ref() }.map_or(f64::NAN, |s| s.0.gap_bound)
}

/// # Safety
/// `solution` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_solution_optimality(
    solution: *const MdfcdaSolution,
    out: *mut MdfcdaOptimality,
) -> MdfcdaStatus {
    guard(|| {
        let s = unsafe { deref(solution, "solution") }?;
        let o = match s.0.optimality {
            Optimality::ProvedOptimal => MdfcdaOptimality::ProvedOptimal,
            Optimality::Heuristic => MdfcdaOptimality::Heuristic,
            Optimality::Oracle => MdfcdaOptimality::Oracle,
        };
        write_out(out, o, "out")
    })
}

/// Whether the consumer at row `consumer` (insertion order) won.
///
/// # Safety
/// `solution` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_solution_is_winner(
    solution: *const MdfcdaSolution,
    consumer: usize,
    out: *mut bool,
) -> MdfcdaStatus {
    guard(|| {
        let a = &unsafe { deref(solution, "solution") }?.0.allocation;
        if consumer >= a.num_consumers() {
            return Err(invalid(format!("consumer index {consumer} out of range")));
        }
        write_out(out, a.is_winner(consumer), "out")
    })
}

/// Units of type `resource` moved from provider row `provider` to consumer row `consumer`.
///
/// # Safety
/// `solution` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_solution_units(
    solution: *const MdfcdaSolution,
    consumer: usize,
    resource: usize,
    provider: usize,
    out: *mut u32,
) -> MdfcdaStatus {
    guard(|| {
        let a = &unsafe { deref(solution, "solution") }?.0.allocation;
        if consumer >= a.num_consumers() || resource >= a.num_types() || provider >= a.num_providers() {
            return Err(invalid(format!("index ({consumer}, {resource}, {provider}) out of range")));
        }
        write_out(out, a.units(consumer, resource, provider), "out")
    })
}

/// # Safety
/// `solution` must be null or a solution not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_solution_free(solution: *mut MdfcdaSolution) {
    if !solution.is_null() {
        drop(unsafe { Box::from_raw(solution) });
    }
}

/// Runs a simulation configured by TOML text (same keys as the CLI config
/// file; `output_dir` is ignored).
///
/// # Safety
/// `config_toml` must be a nul-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_simulate(config_toml: *const c_char, out: *mut *mut MdfcdaReport) -> MdfcdaStatus {
    guard(|| {
        let config = ExperimentConfig::from_toml_str(unsafe { string(config_toml, "config_toml") }?)?;
        let outcome = run_simulation(&config.scenario, &config.engine)?;
        write_out(out, Box::into_raw(Box::new(MdfcdaReport(outcome.report))), "out")
    })
}

/// # Safety
/// `report` must be live.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_report_num_runs(report: *const MdfcdaReport) -> usize {
    unsafe { report.as_ref() }.map_or(0, |r| r.0.per_run.len())
}

/// Drop count of the run at position `index`.
///
/// # Safety
/// `report` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_report_run_drops(
    report: *const MdfcdaReport,
    index: usize,
    out: *mut u32,
) -> MdfcdaStatus {
    guard(|| {
        let r = unsafe { deref(report, "report") }?;
        let row = r.0.per_run.get(index).ok_or_else(|| invalid(format!("run index {index} out of range")))?;
        write_out(out, row.drops, "out")
    })
}

/// Full report as JSON; free with [`mdfcda_string_free`].
///
/// # Safety
/// `report` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_report_to_json(report: *const MdfcdaReport, out: *mut *mut c_char) -> MdfcdaStatus {
    guard(|| {
        let r = unsafe { deref(report, "report") }?;
        let json = CString::new(r.0.to_json()?).map_err(|e| invalid(e.to_string()))?;
        write_out(out, json.into_raw(), "out")
    })
}

/// # Safety
/// `report` must be null or a report not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mdfcda_report_free(report: *mut MdfcdaReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}
