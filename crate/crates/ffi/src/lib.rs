//! C ABI over the pcause estimator.
//!
//! The surface follows the usual conventions for C bindings: datasets live
//! behind an opaque handle, every fallible call returns a `PcStatus`, and
//! the message for the most recent failure on the current thread is
//! available through `pc_last_error_message`. The matching header
//! `include/pcause.h` is generated from this file at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use pcause::estimator::{estimate_pc, pc_bounds};
use pcause::io::read_units_csv;
use pcause::matching::{MatchMode, MatchSpec, Metric, TieRule};
use pcause::model::{
    contingency_from_partition, partition_dataset, ContingencyTable, Regime, Unit,
};
use pcause::pn::pn_bounds;
use pcause::synth::gen_example1;
use pcause::Error;

/// A loaded unit dataset. Opaque; create with `pc_dataset_from_csv` or
/// `pc_dataset_example1`, release with `pc_dataset_free`.
pub struct PcDataset {
    units: Vec<Unit>,
}

/// Result of a library call. Anything other than `Ok` leaves a description
/// in `pc_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A byte buffer was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Input text could not be parsed; the message carries source and line.
    ParseError = 3,
    /// A parameter sat outside its documented domain.
    DomainError = 4,
    /// The computation itself was impossible on this data (empty cells,
    /// undefined ratios, infeasible assumptions, and so on).
    EstimationError = 5,
}

/// Distance metric used when matching exposed deaths to the unexposed pool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcMetric {
    EuclideanStandardized = 0,
    AbsoluteDifference = 1,
    Mahalanobis = 2,
    IdentityThreshold = 3,
}

/// Handling of distance ties at the m-th match.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcTieRule {
    Fractional = 0,
    LowestId = 1,
}

/// Whether pool elements may be matched repeatedly.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcMatchMode {
    WithReplacement = 0,
    BalancedAssignment = 1,
}

/// Which regime a 2x2 table was collected under.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcRegime {
    Experimental = 0,
    Observational = 1,
}

/// Matching configuration. Obtain defaults from `pc_match_options_default`
/// and adjust the fields you need; `threshold_t` is NaN when unset.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcMatchOptions {
    pub metric: PcMetric,
    /// Matches taken per exposed death (at least 1).
    pub m: usize,
    pub tie_rule: PcTieRule,
    pub mode: PcMatchMode,
    /// Similarity cutoff in [0, 1] for the identity-threshold metric; NaN
    /// means unset.
    pub threshold_t: f64,
}

/// A PC estimate with its diagnostics.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcEstimate {
    /// Fraction of match credit landing in the unexposed survivors.
    pub pc_raw: f64,
    /// pc_raw clipped into the theoretical bounds.
    pub pc_clamped: f64,
    /// Transition coefficient a (fraction of A matched into D).
    pub a: f64,
    /// Transition coefficient b (fraction of B matched into D).
    pub b: f64,
    /// Risk ratio; +infinity when no unexposed deaths exist.
    pub rr: f64,
    pub bound_lower: f64,
    pub bound_upper: f64,
    /// Set sizes: unexposed survivors, unexposed deaths, exposed survivors,
    /// exposed deaths.
    pub count_a: u64,
    pub count_b: u64,
    pub count_c: u64,
    pub count_d: u64,
    /// True when pc_raw fell meaningfully outside the bounds.
    pub out_of_bounds: bool,
    /// False when the two exposure arms differ in size.
    pub arms_balanced: bool,
}

/// A 2x2 exposure-by-outcome table. `n_xy` counts exposed units with the
/// outcome, `n_x_not_y_not` unexposed units without it.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcTable {
    pub n_xy: u64,
    pub n_xy_not: u64,
    pub n_x_not_y: u64,
    pub n_x_not_y_not: u64,
    pub regime: PcRegime,
}

/// Probability-of-necessity bounds, raw and clipped to [0, 1].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcPnBounds {
    pub pn_lower: f64,
    pub pn_upper: f64,
    pub raw_lower: f64,
    pub raw_upper: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: PcStatus, message: String) -> PcStatus {
    let c = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained a NUL byte").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
    status
}

fn fail_from(e: &Error) -> PcStatus {
    let status = match e {
        Error::Parse { .. } | Error::Csv(..) | Error::Json(..) => PcStatus::ParseError,
        Error::OutOfDomain { .. }
        | Error::BadThreshold { .. }
        | Error::BadGeneratorParam { .. }
        | Error::DegenerateSplit { .. }
        | Error::NonBinary { .. }
        | Error::CovariateArity { .. } => PcStatus::DomainError,
        _ => PcStatus::EstimationError,
    };
    fail(status, e.to_string())
}

fn ok() -> PcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
    PcStatus::Ok
}

fn null_arg(name: &str) -> PcStatus {
    fail(PcStatus::NullArgument, format!("{name} must not be null"))
}

/// The message for the most recent failing call on this thread, or an empty
/// string after a success. The pointer stays valid until the next pcause
/// call on the same thread; copy the string if you need it longer.
#[no_mangle]
pub extern "C" fn pc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// The library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// The default matching configuration: one standardized-euclidean match per
/// exposed death, fractional ties, with replacement.
#[no_mangle]
pub extern "C" fn pc_match_options_default() -> PcMatchOptions {
    PcMatchOptions {
        metric: PcMetric::EuclideanStandardized,
        m: 1,
        tie_rule: PcTieRule::Fractional,
        mode: PcMatchMode::WithReplacement,
        threshold_t: f64::NAN,
    }
}

fn spec_of(options: &PcMatchOptions) -> MatchSpec {
    MatchSpec {
        metric: match options.metric {
            PcMetric::EuclideanStandardized => Metric::EuclideanStandardized,
            PcMetric::AbsoluteDifference => Metric::AbsoluteDifference,
            PcMetric::Mahalanobis => Metric::Mahalanobis,
            PcMetric::IdentityThreshold => Metric::IdentityThreshold,
        },
        m: options.m,
        threshold_t: if options.threshold_t.is_nan() {
            None
        } else {
            Some(options.threshold_t)
        },
        tie_rule: match options.tie_rule {
            PcTieRule::Fractional => TieRule::Fractional,
            PcTieRule::LowestId => TieRule::LowestId,
        },
        mode: match options.mode {
            PcMatchMode::WithReplacement => MatchMode::WithReplacement,
            PcMatchMode::BalancedAssignment => MatchMode::BalancedAssignment,
        },
    }
}

fn table_of(t: &PcTable) -> Result<ContingencyTable, Error> {
    ContingencyTable::new(
        t.n_xy,
        t.n_xy_not,
        t.n_x_not_y,
        t.n_x_not_y_not,
        match t.regime {
            PcRegime::Experimental => Regime::Experimental,
            PcRegime::Observational => Regime::Observational,
        },
    )
}

/// Parses a unit dataset from CSV bytes (header `id,x,y,<covariates...>`)
/// and stores a new handle in `*out`.
///
/// # Safety
///
/// `bytes` must point to `len` readable bytes and `out` to a writable
/// `PcDataset*`. On success the caller owns the handle and must release it
/// with `pc_dataset_free`.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_from_csv(
    bytes: *const u8,
    len: usize,
    out: *mut *mut PcDataset,
) -> PcStatus {
    if out.is_null() {
        return null_arg("out");
    }
    if bytes.is_null() {
        return null_arg("bytes");
    }
    let slice = std::slice::from_raw_parts(bytes, len);
    if std::str::from_utf8(slice).is_err() {
        return fail(
            PcStatus::InvalidUtf8,
            "dataset bytes are not valid UTF-8".to_string(),
        );
    }
    match read_units_csv(slice, "<memory>") {
        Ok(data) => {
            *out = Box::into_raw(Box::new(PcDataset { units: data.units }));
            ok()
        }
        Err(e) => fail_from(&e),
    }
}

/// Generates a uniform-Id synthetic dataset (`n_per_arm` units per exposure
/// arm, unexposed survivor fraction `ab_split`, exposed survivor fraction
/// `cd_split`) and stores a new handle in `*out`.
///
/// # Safety
///
/// `out` must point to a writable `PcDataset*`. On success the caller owns
/// the handle and must release it with `pc_dataset_free`.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_example1(
    n_per_arm: usize,
    ab_split: f64,
    cd_split: f64,
    seed: u64,
    out: *mut *mut PcDataset,
) -> PcStatus {
    if out.is_null() {
        return null_arg("out");
    }
    match gen_example1(n_per_arm, ab_split, cd_split, seed) {
        Ok(units) => {
            *out = Box::into_raw(Box::new(PcDataset { units }));
            ok()
        }
        Err(e) => fail_from(&e),
    }
}

/// Number of units in a dataset; 0 for a null handle.
///
/// # Safety
///
/// `ds` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_len(ds: *const PcDataset) -> usize {
    if ds.is_null() {
        0
    } else {
        (*ds).units.len()
    }
}

/// Releases a dataset handle. Null is ignored.
///
/// # Safety
///
/// `ds` must be null or a handle obtained from this library that has not
/// already been freed.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_free(ds: *mut PcDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Tabulates a dataset into a 2x2 exposure-by-outcome table labeled with
/// `regime`.
///
/// # Safety
///
/// `ds` must be a live handle and `out` a writable `PcTable`.
#[no_mangle]
pub unsafe extern "C" fn pc_dataset_table(
    ds: *const PcDataset,
    regime: PcRegime,
    out: *mut PcTable,
) -> PcStatus {
    if ds.is_null() {
        return null_arg("ds");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let p = match partition_dataset(&(*ds).units) {
        Ok(p) => p,
        Err(e) => return fail_from(&e),
    };
    let t = contingency_from_partition(
        &p,
        match regime {
            PcRegime::Experimental => Regime::Experimental,
            PcRegime::Observational => Regime::Observational,
        },
    );
    *out = PcTable {
        n_xy: t.n_xy,
        n_xy_not: t.n_xy_not,
        n_x_not_y: t.n_x_not_y,
        n_x_not_y_not: t.n_x_not_y_not,
        regime,
    };
    ok()
}

/// Estimates the probability of causation on a dataset by covariate
/// matching. `options` may be null for the defaults.
///
/// # Safety
///
/// `ds` must be a live handle, `options` null or a readable
/// `PcMatchOptions`, and `out` a writable `PcEstimate`.
#[no_mangle]
pub unsafe extern "C" fn pc_estimate(
    ds: *const PcDataset,
    options: *const PcMatchOptions,
    out: *mut PcEstimate,
) -> PcStatus {
    if ds.is_null() {
        return null_arg("ds");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let spec = if options.is_null() {
        spec_of(&pc_match_options_default())
    } else {
        spec_of(&*options)
    };
    let p = match partition_dataset(&(*ds).units) {
        Ok(p) => p,
        Err(e) => return fail_from(&e),
    };
    match estimate_pc(&p, &spec) {
        Ok(e) => {
            *out = PcEstimate {
                pc_raw: e.pc_raw,
                pc_clamped: e.pc_clamped,
                a: e.a,
                b: e.b,
                rr: e.rr,
                bound_lower: e.bound_lower,
                bound_upper: e.bound_upper,
                count_a: e.counts.a as u64,
                count_b: e.counts.b as u64,
                count_c: e.counts.c as u64,
                count_d: e.counts.d as u64,
                out_of_bounds: e.out_of_bounds_flag,
                arms_balanced: e.arms_balanced,
            };
            ok()
        }
        Err(e) => fail_from(&e),
    }
}

/// Theoretical bounds on the probability of causation from a 2x2 table.
///
/// # Safety
///
/// `table` must be readable; `lower` and `upper` must be writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pc_bounds_from_table(
    table: *const PcTable,
    lower: *mut f64,
    upper: *mut f64,
) -> PcStatus {
    if table.is_null() {
        return null_arg("table");
    }
    if lower.is_null() {
        return null_arg("lower");
    }
    if upper.is_null() {
        return null_arg("upper");
    }
    let t = match table_of(&*table) {
        Ok(t) => t,
        Err(e) => return fail_from(&e),
    };
    match pc_bounds(&t) {
        Ok((lo, up)) => {
            *lower = lo;
            *upper = up;
            ok()
        }
        Err(e) => fail_from(&e),
    }
}

/// Probability-of-necessity bounds from an experimental and an
/// observational 2x2 table. The tables must carry the matching regimes.
///
/// # Safety
///
/// `experimental` and `observational` must be readable and `out` a writable
/// `PcPnBounds`.
#[no_mangle]
pub unsafe extern "C" fn pc_pn_bounds(
    experimental: *const PcTable,
    observational: *const PcTable,
    out: *mut PcPnBounds,
) -> PcStatus {
    if experimental.is_null() {
        return null_arg("experimental");
    }
    if observational.is_null() {
        return null_arg("observational");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let exp = match table_of(&*experimental) {
        Ok(t) => t,
        Err(e) => return fail_from(&e),
    };
    let obs = match table_of(&*observational) {
        Ok(t) => t,
        Err(e) => return fail_from(&e),
    };
    match pn_bounds(&exp, &obs) {
        Ok(r) => {
            *out = PcPnBounds {
                pn_lower: r.pn_lower,
                pn_upper: r.pn_upper,
                raw_lower: r.raw_lower,
                raw_upper: r.raw_upper,
            };
            ok()
        }
        Err(e) => fail_from(&e),
    }
}
