//! Run reports: the JSON envelope every CLI subcommand emits.
//!
//! A report records what was asked (command echo, input digests, seed) and
//! what came out (the payload). Serialization is stable: serializing, parsing
//! and serializing again reproduces the bytes, and two runs of the same
//! command on the same inputs differ at most in `elapsed_ms`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distribution::PCDistribution;
use crate::error::Result;
use crate::estimator::{rr_serde, PCEstimate};
use crate::matching::MatchSpec;
use crate::model::{ContingencyTable, SetCounts};
use crate::pn::{PNResult, SweepCurve};

/// SHA-256 of raw bytes, hex-encoded.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One input stream as the command saw it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    /// The path as given on the command line; "-" means stdin.
    pub source: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(source: impl Into<String>, bytes: &[u8]) -> Self {
        InputDigest {
            source: source.into(),
            sha256: sha256_hex(bytes),
        }
    }
}

/// Set counts and balance diagnostics for `partition`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub counts: SetCounts,
    pub n_unexposed: usize,
    pub n_exposed: usize,
    pub total: usize,
    pub arms_balanced: bool,
}

/// A corollary estimate that may be infeasible on the given data. Exactly one
/// of the fields is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary {
    pub value: Option<f64>,
    pub infeasible: Option<String>,
}

impl Corollary {
    pub fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(value) => Corollary {
                value: Some(value),
                infeasible: None,
            },
            Err(e) => Corollary {
                value: None,
                infeasible: Some(e.to_string()),
            },
        }
    }
}

/// Bounds, risk ratio, and the monotonicity corollaries for `bounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsSummary {
    pub table: ContingencyTable,
    pub bound_lower: f64,
    pub bound_upper: f64,
    #[serde(with = "rr_serde")]
    pub rr: f64,
    pub pc_under_monotonicity: Corollary,
    pub pc_under_reverse_monotonicity: Corollary,
}

/// What `simulate` produced (the units themselves go to the CSV stream).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub generator: String,
    pub units: usize,
    pub counts: SetCounts,
    pub covariate_names: Vec<String>,
}

/// Retained |D| at one similarity threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileRetention {
    pub t: f64,
    pub retained: usize,
}

/// The individual-level result: the filtered estimate plus the retention
/// table that contextualizes the chosen threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2iSummary {
    pub threshold_t: f64,
    pub estimate: PCEstimate,
    pub retention_by_decile: Vec<DecileRetention>,
}

/// What a subcommand computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Partition(PartitionSummary),
    Estimate(PCEstimate),
    Bounds(BoundsSummary),
    Pn(PNResult),
    Sweep(SweepCurve),
    Distribution(PCDistribution),
    Simulate(SimulateSummary),
    G2i(G2iSummary),
}

/// The envelope written to stdout as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Argv echo, starting at the subcommand.
    pub command: Vec<String>,
    pub inputs: Vec<InputDigest>,
    /// Master seed, when the command is stochastic.
    pub seed: Option<u64>,
    /// Match specifications in play: empty for table-only commands, one for
    /// single-matcher commands, several for an ensemble.
    pub specs: Vec<MatchSpec>,
    pub payload: Payload,
    /// Wall-clock run time. The one field excluded from the determinism
    /// guarantee.
    pub elapsed_ms: u64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
