//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A unit id appears more than once in the dataset.
    #[error("duplicate unit id {id:?}")]
    DuplicateId { id: String },

    /// An exposure or outcome value is neither 0 nor 1.
    #[error("unit {id:?}: field {field:?} must be 0 or 1, got {value}")]
    NonBinary {
        id: String,
        field: &'static str,
        value: String,
    },

    /// A unit's covariate vector has the wrong length for the dataset.
    #[error("unit {id:?} has {got} covariates, expected {expected}")]
    CovariateArity {
        id: String,
        expected: usize,
        got: usize,
    },

    /// A covariate value is NaN or infinite.
    #[error("unit {id:?}: covariate {index} is not finite")]
    NonFiniteCovariate { id: String, index: usize },

    /// The dataset contains no units.
    #[error("dataset is empty")]
    EmptyDataset,

    /// A conditional probability has an empty conditioning column.
    #[error("conditional probability undefined: no units with {column}")]
    UndefinedConditional { column: &'static str },

    /// A contingency table with zero total count.
    #[error("contingency table is all zeros")]
    EmptyTable,

    /// The matching pool (A u B) is empty.
    #[error("matching pool is empty: no unexposed units to match against")]
    EmptyPool,

    /// No exposed deaths (set D is empty), so PC has no cases to attribute.
    #[error("set D is empty: no exposed units with the outcome")]
    NoPositiveCases,

    /// Balanced assignment needs at least |D| pool elements.
    #[error("balanced assignment infeasible: |D| = {d} but the pool has only {pool} elements")]
    BalancedDeficit { d: usize, pool: usize },

    /// Balanced assignment is one-to-one, so it only supports m = 1.
    #[error("balanced assignment is one-to-one and requires m = 1, got m = {m}")]
    BalancedMultiMatch { m: usize },

    /// m = 0 asks for zero matches per element.
    #[error("match count m must be at least 1")]
    ZeroMatchCount,

    /// threshold_t outside its domain.
    #[error("threshold T must lie in (0, 1], got {t}")]
    BadThreshold { t: f64 },

    /// The covariance matrix is singular, so the Mahalanobis metric is
    /// unusable on this dataset.
    #[error(
        "covariance matrix is singular; the Mahalanobis metric is undefined here \
         (use euclidean_standardized instead)"
    )]
    SingularCovariance,

    /// Risk ratio 0/0: both B and D are empty.
    #[error("risk ratio undefined: no deaths in either arm (|B| = |D| = 0)")]
    RiskRatioUndefined,

    /// One of the study arms has no units.
    #[error("arm {arm} is empty")]
    EmptyArm { arm: &'static str },

    /// The monotonicity assumption |B| <= |D| fails on this data.
    #[error("monotonicity requires |B| <= |D|, got |B| = {b}, |D| = {d}")]
    MonotonicityInfeasible { b: usize, d: usize },

    /// The reverse-monotonicity assumption |B| <= |C| fails on this data.
    #[error("reverse monotonicity requires |B| <= |C|, got |B| = {b}, |C| = {c}")]
    ReverseMonotonicityInfeasible { b: usize, c: usize },

    /// A transition coefficient or ratio outside its domain.
    #[error("{what} must lie in {domain}, got {value}")]
    OutOfDomain {
        what: &'static str,
        domain: &'static str,
        value: f64,
    },

    /// A table labeled with the wrong regime was passed for a role.
    #[error("{role} table is labeled {got}, expected {expected}")]
    WrongRegime {
        role: &'static str,
        expected: &'static str,
        got: &'static str,
    },

    /// PN bounds need observed joint exposure-and-outcome mass.
    #[error("PN undefined: P(x, y) = 0 in the observational table (no exposed deaths observed)")]
    PnUndefined,

    /// The experimental lower bound needs a nonzero treated death rate.
    #[error("experimental lower bound undefined: P(y | do(x)) = 0")]
    ExperimentalRateZero,

    /// A sensitivity perturbation drove a cell count negative.
    #[error("perturbation k = {k} makes cell {cell} negative")]
    NegativeCell { cell: &'static str, k: i64 },

    /// A sweep was asked for an estimator that needs a table we don't have.
    #[error("sweep estimator {estimator} requires an observational table")]
    MissingObservational { estimator: &'static str },

    /// Too many distribution iterations failed to produce an estimate.
    #[error("{skipped} of {total} iterations were skipped; refusing to summarize when most iterations fail")]
    TooManySkipped { skipped: usize, total: usize },

    /// A resampling quota exceeds what the data can supply.
    #[error("stratified quota for {cell} is {required} but only {available} units are available")]
    InsufficientCell {
        cell: &'static str,
        required: usize,
        available: usize,
    },

    /// arm_size exceeds an arm when sampling without replacement.
    #[error("arm_size {requested} exceeds the {arm} arm ({available} units)")]
    ArmTooSmall {
        arm: &'static str,
        requested: usize,
        available: usize,
    },

    /// Cannot summarize an empty sample list.
    #[error("no samples to summarize")]
    NoSamples,

    /// An ensemble needs at least two specifications.
    #[error("ensemble needs at least 2 match specifications, got {got}")]
    EnsembleTooSmall { got: usize },

    /// A generator parameter outside its domain.
    #[error("{what} must lie in {domain}, got {value}")]
    BadGeneratorParam {
        what: &'static str,
        domain: &'static str,
        value: f64,
    },

    /// Rounding the split fractions left a required set empty.
    #[error("split leaves {set} empty; the generator needs at least one unit there")]
    DegenerateSplit { set: &'static str },

    /// A network spec references a node that was never declared.
    #[error("network edge references unknown node {node:?}")]
    UnknownNode { node: String },

    /// The same node name appears twice in the declaration list.
    #[error("node {node:?} is declared more than once")]
    DuplicateNode { node: String },

    /// The same parent→child edge appears twice.
    #[error("edge {parent:?} -> {child:?} is declared more than once")]
    DuplicateEdge { parent: String, child: String },

    /// The cause and effect roles must name two different nodes.
    #[error("cause and effect must be different nodes, both are {node:?}")]
    CauseEqualsEffect { node: String },

    /// The network graph has a directed cycle.
    #[error("network is cyclic: no topological order exists (cycle through {node:?})")]
    CyclicNetwork { node: String },

    /// A conditional probability table row is missing.
    #[error("node {node:?} has no CPT entry for parent pattern {pattern:?}")]
    MissingCptRow { node: String, pattern: String },

    /// A CPT entry that should not exist given the node's parents.
    #[error("node {node:?} has a CPT entry for {pattern:?}, which does not match its {parents} parent(s)")]
    UnexpectedCptRow {
        node: String,
        pattern: String,
        parents: usize,
    },

    /// A probability outside [0, 1].
    #[error("node {node:?}, pattern {pattern:?}: probability {p} is not in [0, 1]")]
    BadProbability {
        node: String,
        pattern: String,
        p: f64,
    },

    /// The designated cause or effect is not a declared node.
    #[error("{role} node {node:?} is not declared in the network")]
    BadRole { role: &'static str, node: String },

    /// The individual filter removed every element of D.
    #[error(
        "no exposed death is similar to the target at T = {t}; \
         the closest has similarity {max_similarity:.4}"
    )]
    NoComparableCases { t: f64, max_similarity: f64 },

    /// The query target's covariates do not match the dataset schema.
    #[error("target has {got} covariates, dataset schema has {expected}")]
    TargetSchemaMismatch { expected: usize, got: usize },

    /// Malformed input file.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    /// A flag combination the command line cannot honor.
    #[error("{message}")]
    CliUsage { message: String },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
