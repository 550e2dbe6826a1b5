//! Group-to-individual PC: estimate for one observed case by restricting
//! Set D to the exposed deaths that resemble that case.
//!
//! Only D is filtered. The unexposed pool A u B stays whole, exactly as the
//! subset formula prescribes; the asymmetry is deliberate, since A and B
//! supply the counterfactual survival frequencies that the retained cases
//! are matched against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_pc, PCEstimate};
use crate::matching::{distance, similarity, DatasetStats, MatchSpec};
use crate::model::{PartitionedSample, Unit};

/// A request for PC specific to one observed case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualQuery {
    /// The observed case. Its covariates must follow the dataset schema; its
    /// own x and y play no role in the similarity filter.
    pub target: Unit,
    /// Keep an exposed death z when similarity(target, z) >= threshold_t.
    /// 0 keeps everything, 1 keeps only covariate-coincident cases.
    pub threshold_t: f64,
    pub spec: MatchSpec,
}

impl IndividualQuery {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold_t) || self.threshold_t.is_nan() {
            return Err(Error::BadThreshold { t: self.threshold_t });
        }
        self.spec.validate()
    }
}

/// Similarity of the target to every element of D, in D's order. Distances
/// use moments of the full partition, so the filter sees the same geometry
/// the whole-population matcher would.
fn d_similarities(p: &PartitionedSample, q: &IndividualQuery) -> Result<Vec<f64>> {
    q.validate()?;
    if p.set_d.is_empty() {
        return Err(Error::NoPositiveCases);
    }
    let dim = p.set_d[0].covariates.len();
    if q.target.covariates.len() != dim {
        return Err(Error::TargetSchemaMismatch {
            expected: dim,
            got: q.target.covariates.len(),
        });
    }
    let stats = DatasetStats::from_units(p.units());
    p.set_d
        .iter()
        .map(|z| Ok(similarity(distance(&q.target, z, &q.spec, &stats)?)))
        .collect()
}

/// The partition with D reduced to the cases at least `threshold_t` similar
/// to the target. A, B, and C pass through untouched.
pub fn filter_set_d(p: &PartitionedSample, q: &IndividualQuery) -> Result<PartitionedSample> {
    let sims = d_similarities(p, q)?;
    let set_d: Vec<Unit> = p
        .set_d
        .iter()
        .zip(&sims)
        .filter(|&(_, &s)| s >= q.threshold_t)
        .map(|(z, _)| z.clone())
        .collect();
    if set_d.is_empty() {
        let max_similarity = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::NoComparableCases {
            t: q.threshold_t,
            max_similarity,
        });
    }
    Ok(PartitionedSample {
        set_d,
        ..p.clone()
    })
}

/// PC for the individual: the ordinary estimator run on the filtered
/// partition, labeled with how many of the exposed deaths were retained.
///
/// At threshold 0 this reduces to the whole-population estimate.
pub fn estimate_individual_pc(
    p: &PartitionedSample,
    q: &IndividualQuery,
) -> Result<PCEstimate> {
    let filtered = filter_set_d(p, q)?;
    let mut estimate = estimate_pc(&filtered, &q.spec)?;
    estimate.retained_d = Some(filtered.set_d.len());
    Ok(estimate)
}

/// How many elements of D survive at each threshold 0.0, 0.1, ..., 1.0.
/// The threshold is chosen subjectively; this table is the decision aid.
pub fn retention_by_decile(
    p: &PartitionedSample,
    q: &IndividualQuery,
) -> Result<Vec<(f64, usize)>> {
    let sims = d_similarities(p, q)?;
    Ok((0..=10)
        .map(|tenths| {
            let t = tenths as f64 / 10.0;
            (t, sims.iter().filter(|&&s| s >= t).count())
        })
        .collect())
}
