//! Distance metrics, similarity, and match assignment from D to the pool A u B.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PartitionedSample, Unit};

/// Covariate distance metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// 0 when the covariate vectors coincide (up to the tolerance implied by
    /// `threshold_t`), 1 otherwise.
    IdentityThreshold,
    /// Sum of absolute coordinate differences.
    AbsoluteDifference,
    /// Euclidean distance after z-scoring every covariate with the pooled
    /// mean and standard deviation. Zero-variance covariates contribute 0.
    EuclideanStandardized,
    /// Mahalanobis distance; requires an invertible covariate covariance.
    Mahalanobis,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "identity_threshold" => Ok(Metric::IdentityThreshold),
            "absolute_difference" => Ok(Metric::AbsoluteDifference),
            "euclidean_standardized" => Ok(Metric::EuclideanStandardized),
            "mahalanobis" => Ok(Metric::Mahalanobis),
            other => Err(format!(
                "unknown metric {other:?} (expected identity_threshold, absolute_difference, \
                 euclidean_standardized, or mahalanobis)"
            )),
        }
    }
}

/// How an equidistance group at the m-th place is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Every member of the straddling group is kept with its fair share of
    /// the leftover credit, so per-element credit always sums to 1.
    Fractional,
    /// Ties break deterministically by ascending unit id.
    LowestId,
}

impl std::str::FromStr for TieRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "fractional" => Ok(TieRule::Fractional),
            "lowest_id" => Ok(TieRule::LowestId),
            other => Err(format!(
                "unknown tie rule {other:?} (expected fractional or lowest_id)"
            )),
        }
    }
}

/// Whether pool elements may be matched repeatedly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Each element of D independently takes its nearest pool elements.
    WithReplacement,
    /// Greedy one-to-one assignment in ascending distance order; every pool
    /// element is consumed at most once. Requires m = 1.
    BalancedAssignment,
}

impl std::str::FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "with_replacement" => Ok(MatchMode::WithReplacement),
            "balanced_assignment" | "balanced" => Ok(MatchMode::BalancedAssignment),
            other => Err(format!(
                "unknown match mode {other:?} (expected with_replacement or balanced_assignment)"
            )),
        }
    }
}

/// Full description of a matching run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchSpec {
    pub metric: Metric,
    /// Matches taken per D element.
    pub m: usize,
    /// Similarity threshold in [0, 1]. Only the identity_threshold metric
    /// consults it: two units count as identical when their similarity is at
    /// least this value. Absent means exact covariate equality.
    pub threshold_t: Option<f64>,
    pub tie_rule: TieRule,
    pub mode: MatchMode,
}

impl Default for MatchSpec {
    fn default() -> Self {
        MatchSpec {
            metric: Metric::EuclideanStandardized,
            m: 1,
            threshold_t: None,
            tie_rule: TieRule::Fractional,
            mode: MatchMode::WithReplacement,
        }
    }
}

impl MatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::ZeroMatchCount);
        }
        if let Some(t) = self.threshold_t {
            if !(0.0..=1.0).contains(&t) || t.is_nan() {
                return Err(Error::BadThreshold { t });
            }
        }
        if self.mode == MatchMode::BalancedAssignment && self.m > 1 {
            return Err(Error::BalancedMultiMatch { m: self.m });
        }
        Ok(())
    }
}

/// Which half of the pool a matched unit came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceSet {
    A,
    B,
}

/// One matched pool element for one D element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub unit_id: String,
    pub source: SourceSet,
    pub similarity: f64,
    /// Credit weight in [0, 1]. The weights of one D element's entries sum
    /// to 1; matches from a tie group straddling the m-th place carry an
    /// equal share of the leftover credit.
    pub weight: f64,
}

/// All matches for one D element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DElementMatches {
    pub d_id: String,
    pub entries: Vec<MatchEntry>,
}

/// Match lists for every element of D plus the aggregate credit totals the
/// estimator consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchAssignment {
    pub per_d: Vec<DElementMatches>,
    pub weight_into_a: f64,
    pub weight_into_b: f64,
}

/// Pooled moments of a dataset's covariates, consumed by the standardized
/// metrics. `identity(dim)` gives unit scales, which turns
/// euclidean_standardized into plain euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub dim: usize,
    pub means: Vec<f64>,
    /// Sample standard deviations (n - 1 denominator); 0 for constant
    /// covariates and for single-unit datasets.
    pub sds: Vec<f64>,
    /// Lower Cholesky factor of the covariance matrix, row-major, or None
    /// when the covariance is singular (or there were too few units to
    /// estimate it). The Mahalanobis metric requires it.
    cov_chol: Option<Vec<f64>>,
}

impl DatasetStats {
    /// Pooled moments over all given units.
    pub fn from_units<'a>(units: impl IntoIterator<Item = &'a Unit>) -> Self {
        let units: Vec<&Unit> = units.into_iter().collect();
        let n = units.len();
        let dim = units.first().map_or(0, |u| u.covariates.len());
        let mut means = vec![0.0; dim];
        for u in &units {
            for (m, v) in means.iter_mut().zip(&u.covariates) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n.max(1) as f64;
        }
        let mut cov = vec![0.0; dim * dim];
        if n >= 2 {
            for u in &units {
                for i in 0..dim {
                    let di = u.covariates[i] - means[i];
                    for j in 0..=i {
                        cov[i * dim + j] += di * (u.covariates[j] - means[j]);
                    }
                }
            }
            for v in &mut cov {
                *v /= (n - 1) as f64;
            }
            for i in 0..dim {
                for j in 0..i {
                    cov[j * dim + i] = cov[i * dim + j];
                }
            }
        }
        let sds = (0..dim).map(|i| cov[i * dim + i].sqrt()).collect();
        let cov_chol = if n >= 2 { cholesky(&cov, dim) } else { None };
        DatasetStats {
            dim,
            means,
            sds,
            cov_chol,
        }
    }

    /// Unit-scale stats: zero means, unit sds, identity covariance. With
    /// these, euclidean_standardized and mahalanobis reduce to the raw
    /// euclidean distance.
    pub fn identity(dim: usize) -> Self {
        let mut chol = vec![0.0; dim * dim];
        for i in 0..dim {
            chol[i * dim + i] = 1.0;
        }
        DatasetStats {
            dim,
            means: vec![0.0; dim],
            sds: vec![1.0; dim],
            cov_chol: Some(chol),
        }
    }

    pub fn has_invertible_covariance(&self) -> bool {
        self.cov_chol.is_some()
    }
}

/// Lower Cholesky factor of a symmetric matrix, or None when the matrix is
/// not (numerically) positive definite.
fn cholesky(a: &[f64], dim: usize) -> Option<Vec<f64>> {
    let max_diag = (0..dim)
        .map(|i| a[i * dim + i])
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-12 * max_diag.max(1.0);
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if s <= tol {
                    return None;
                }
                l[i * dim + i] = s.sqrt();
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Some(l)
}

/// Solves L y = x for lower-triangular L (forward substitution), writing the
/// result into `out`. Whitens a centered covariate vector so that plain
/// euclidean distance on the result equals Mahalanobis distance on the input.
fn forward_solve(l: &[f64], dim: usize, x: &[f64], out: &mut [f64]) {
    for i in 0..dim {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * dim + k] * out[k];
        }
        out[i] = s / l[i * dim + i];
    }
}

/// The Chebyshev cutoff below which two units count as identical under the
/// identity_threshold metric: similarity(d) >= T iff d <= (1-T)/T.
fn identity_cutoff(threshold_t: Option<f64>) -> f64 {
    match threshold_t {
        None => 0.0,
        Some(t) if t == 0.0 => f64::INFINITY,
        Some(t) => (1.0 - t) / t,
    }
}

/// Distance between two units under the spec's metric. Only `spec.metric`
/// and `spec.threshold_t` (for identity_threshold) are consulted.
pub fn distance(u: &Unit, v: &Unit, spec: &MatchSpec, stats: &DatasetStats) -> Result<f64> {
    spec.validate()?;
    for w in [u, v] {
        if w.covariates.len() != stats.dim {
            return Err(Error::CovariateArity {
                id: w.id.clone(),
                expected: stats.dim,
                got: w.covariates.len(),
            });
        }
    }
    match spec.metric {
        Metric::IdentityThreshold => {
            let cutoff = identity_cutoff(spec.threshold_t);
            let cheb = u
                .covariates
                .iter()
                .zip(&v.covariates)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            Ok(if cheb <= cutoff { 0.0 } else { 1.0 })
        }
        Metric::AbsoluteDifference => Ok(u
            .covariates
            .iter()
            .zip(&v.covariates)
            .map(|(a, b)| (a - b).abs())
            .sum()),
        Metric::EuclideanStandardized => {
            let sum: f64 = (0..stats.dim)
                .map(|i| {
                    let sd = stats.sds[i];
                    if sd > 0.0 {
                        let d = (u.covariates[i] - v.covariates[i]) / sd;
                        d * d
                    } else {
                        0.0
                    }
                })
                .sum();
            Ok(sum.sqrt())
        }
        Metric::Mahalanobis => {
            let l = stats.cov_chol.as_deref().ok_or(Error::SingularCovariance)?;
            let dim = stats.dim;
            let diff: Vec<f64> = (0..dim)
                .map(|i| u.covariates[i] - v.covariates[i])
                .collect();
            let mut w = vec![0.0; dim];
            forward_solve(l, dim, &diff, &mut w);
            Ok(w.iter().map(|v| v * v).sum::<f64>().sqrt())
        }
    }
}

/// Maps a distance to a similarity in (0, 1]: 1/(1 + d). Strictly decreasing,
/// with similarity(0) = 1.
pub fn similarity(d: f64) -> f64 {
    debug_assert!(d >= 0.0, "distances are nonnegative");
    1.0 / (1.0 + d)
}

/// A pool element: a unit from A or B plus its source label.
#[derive(Debug, Clone, Copy)]
pub struct PoolEntry<'a> {
    pub unit: &'a Unit,
    pub source: SourceSet,
}

/// Labels the unexposed units of a partition as the matching pool, A first.
pub fn pool_of(p: &PartitionedSample) -> Vec<PoolEntry<'_>> {
    p.set_a
        .iter()
        .map(|u| PoolEntry {
            unit: u,
            source: SourceSet::A,
        })
        .chain(p.set_b.iter().map(|u| PoolEntry {
            unit: u,
            source: SourceSet::B,
        }))
        .collect()
}

/// Pool covariates pre-transformed for the spec's metric, so the inner loop
/// is a plain L1/L2/Chebyshev scan regardless of metric.
struct PreparedPool<'a> {
    dim: usize,
    coords: Vec<f64>,
    ids: Vec<&'a str>,
    sources: Vec<SourceSet>,
    metric: Metric,
    cutoff: f64,
}

impl<'a> PreparedPool<'a> {
    fn len(&self) -> usize {
        self.ids.len()
    }

    fn coord(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// Appends a unit's covariates, transformed per the metric, onto `out`.
fn push_prepared(
    covs: &[f64],
    metric: Metric,
    stats: &DatasetStats,
    out: &mut Vec<f64>,
) -> Result<()> {
    match metric {
        Metric::IdentityThreshold | Metric::AbsoluteDifference => out.extend_from_slice(covs),
        Metric::EuclideanStandardized => {
            for i in 0..stats.dim {
                let sd = stats.sds[i];
                out.push(if sd > 0.0 {
                    (covs[i] - stats.means[i]) / sd
                } else {
                    0.0
                });
            }
        }
        Metric::Mahalanobis => {
            let l = stats.cov_chol.as_deref().ok_or(Error::SingularCovariance)?;
            let dim = stats.dim;
            let diff: Vec<f64> = (0..dim).map(|i| covs[i] - stats.means[i]).collect();
            let start = out.len();
            out.resize(start + dim, 0.0);
            forward_solve(l, dim, &diff, &mut out[start..]);
        }
    }
    Ok(())
}

fn prepare_pool<'a>(
    pool: &[PoolEntry<'a>],
    spec: &MatchSpec,
    stats: &DatasetStats,
) -> Result<PreparedPool<'a>> {
    let mut coords = Vec::with_capacity(pool.len() * stats.dim);
    let mut ids = Vec::with_capacity(pool.len());
    let mut sources = Vec::with_capacity(pool.len());
    for e in pool {
        if e.unit.covariates.len() != stats.dim {
            return Err(Error::CovariateArity {
                id: e.unit.id.clone(),
                expected: stats.dim,
                got: e.unit.covariates.len(),
            });
        }
        push_prepared(&e.unit.covariates, spec.metric, stats, &mut coords)?;
        ids.push(e.unit.id.as_str());
        sources.push(e.source);
    }
    Ok(PreparedPool {
        dim: stats.dim,
        coords,
        ids,
        sources,
        metric: spec.metric,
        cutoff: identity_cutoff(spec.threshold_t),
    })
}

/// Distance between two prepared coordinate vectors.
fn pair_distance(metric: Metric, cutoff: f64, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::AbsoluteDifference => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        Metric::EuclideanStandardized | Metric::Mahalanobis => a
            .iter()
            .zip(b)
            .map(|(x, y)| {
                let d = x - y;
                d * d
            })
            .sum::<f64>()
            .sqrt(),
        Metric::IdentityThreshold => {
            let cheb = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0_f64, f64::max);
            if cheb <= cutoff {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Core selection: fills `out` with (pool index, distance, credit weight) for
/// one target's matches, ordered by ascending distance then id. `scratch` is
/// caller-provided so repeated calls don't reallocate.
fn select_into(
    target: &[f64],
    pool: &PreparedPool<'_>,
    m: usize,
    tie_rule: TieRule,
    scratch: &mut Vec<(f64, u32)>,
    out: &mut Vec<(u32, f64, f64)>,
) {
    out.clear();
    scratch.clear();
    for i in 0..pool.len() {
        let d = pair_distance(pool.metric, pool.cutoff, target, pool.coord(i));
        scratch.push((d, i as u32));
    }
    let k = m.min(scratch.len());
    let cmp = |x: &(f64, u32), y: &(f64, u32)| {
        x.0.total_cmp(&y.0)
            .then_with(|| pool.ids[x.1 as usize].cmp(pool.ids[y.1 as usize]))
    };
    if k < scratch.len() {
        scratch.select_nth_unstable_by(k - 1, cmp);
    }
    let boundary = scratch[..k]
        .iter()
        .map(|e| e.0)
        .fold(f64::NEG_INFINITY, f64::max);
    match tie_rule {
        TieRule::LowestId => {
            let w = 1.0 / k as f64;
            let mut head: Vec<(f64, u32)> = scratch[..k].to_vec();
            head.sort_unstable_by(cmp);
            out.extend(head.into_iter().map(|(d, i)| (i, d, w)));
        }
        TieRule::Fractional => {
            let count_less = scratch.iter().filter(|e| e.0 < boundary).count();
            let group = scratch.iter().filter(|e| e.0 == boundary).count();
            let strict_w = 1.0 / k as f64;
            let tie_w = (k - count_less) as f64 / (group * k) as f64;
            for &(d, i) in scratch.iter() {
                if d < boundary {
                    out.push((i, d, strict_w));
                } else if d == boundary {
                    out.push((i, d, tie_w));
                }
            }
            out.sort_unstable_by(|x, y| {
                x.1.total_cmp(&y.1)
                    .then_with(|| pool.ids[x.0 as usize].cmp(pool.ids[y.0 as usize]))
            });
        }
    }
}

/// Nearest matches for one unit against a labeled pool.
///
/// Returns min(m, |pool|) entries sorted by descending similarity. Under
/// `fractional` a tie group straddling the m-th place is returned whole, each
/// member carrying an equal share of the remaining credit (so the list can
/// then be longer); under `lowest_id` ties break by ascending unit id.
pub fn nearest_matches(
    z: &Unit,
    pool: &[PoolEntry<'_>],
    spec: &MatchSpec,
    stats: &DatasetStats,
) -> Result<Vec<MatchEntry>> {
    spec.validate()?;
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if z.covariates.len() != stats.dim {
        return Err(Error::CovariateArity {
            id: z.id.clone(),
            expected: stats.dim,
            got: z.covariates.len(),
        });
    }
    let prepared = prepare_pool(pool, spec, stats)?;
    let mut target = Vec::with_capacity(stats.dim);
    push_prepared(&z.covariates, spec.metric, stats, &mut target)?;
    let mut scratch = Vec::new();
    let mut picked = Vec::new();
    select_into(
        &target,
        &prepared,
        spec.m,
        spec.tie_rule,
        &mut scratch,
        &mut picked,
    );
    Ok(picked
        .into_iter()
        .map(|(i, d, w)| MatchEntry {
            unit_id: prepared.ids[i as usize].to_string(),
            source: prepared.sources[i as usize],
            similarity: similarity(d),
            weight: w,
        })
        .collect())
}

/// Weighted credit into A and into B for every D element, without building
/// per-match records. This is the estimator's hot path.
pub(crate) fn credit_weights(
    p: &PartitionedSample,
    spec: &MatchSpec,
    stats: &DatasetStats,
) -> Result<(f64, f64)> {
    run_matching(p, spec, stats, &mut |_, _| {})
}

/// Runs the configured matching and streams (d_index, matches) to `sink`
/// while accumulating aggregate credit. Shared by `credit_weights` and
/// `match_all`.
fn run_matching(
    p: &PartitionedSample,
    spec: &MatchSpec,
    stats: &DatasetStats,
    sink: &mut dyn FnMut(usize, &[(u32, f64, f64)]),
) -> Result<(f64, f64)> {
    spec.validate()?;
    if p.set_d.is_empty() {
        return Err(Error::NoPositiveCases);
    }
    let pool = pool_of(p);
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let prepared = prepare_pool(&pool, spec, stats)?;
    let dim = stats.dim;
    let mut d_coords = Vec::with_capacity(p.set_d.len() * dim);
    for z in &p.set_d {
        if z.covariates.len() != dim {
            return Err(Error::CovariateArity {
                id: z.id.clone(),
                expected: dim,
                got: z.covariates.len(),
            });
        }
        push_prepared(&z.covariates, spec.metric, stats, &mut d_coords)?;
    }
    let mut into_a = 0.0;
    let mut into_b = 0.0;
    match spec.mode {
        MatchMode::WithReplacement => {
            let mut scratch = Vec::new();
            let mut picked = Vec::new();
            for (zi, _) in p.set_d.iter().enumerate() {
                let target = &d_coords[zi * dim..(zi + 1) * dim];
                select_into(
                    target,
                    &prepared,
                    spec.m,
                    spec.tie_rule,
                    &mut scratch,
                    &mut picked,
                );
                for &(i, _, w) in &picked {
                    match prepared.sources[i as usize] {
                        SourceSet::A => into_a += w,
                        SourceSet::B => into_b += w,
                    }
                }
                sink(zi, &picked);
            }
        }
        MatchMode::BalancedAssignment => {
            let nd = p.set_d.len();
            if prepared.len() < nd {
                return Err(Error::BalancedDeficit {
                    d: nd,
                    pool: prepared.len(),
                });
            }
            let mut pairs = Vec::with_capacity(nd * prepared.len());
            for (zi, z) in p.set_d.iter().enumerate() {
                let target = &d_coords[zi * dim..(zi + 1) * dim];
                for i in 0..prepared.len() {
                    let d = pair_distance(prepared.metric, prepared.cutoff, target, prepared.coord(i));
                    pairs.push((d, zi as u32, i as u32));
                }
                let _ = z;
            }
            pairs.sort_unstable_by(|x, y| {
                x.0.total_cmp(&y.0)
                    .then_with(|| p.set_d[x.1 as usize].id.cmp(&p.set_d[y.1 as usize].id))
                    .then_with(|| prepared.ids[x.2 as usize].cmp(prepared.ids[y.2 as usize]))
            });
            let mut chosen: Vec<Option<(u32, f64)>> = vec![None; nd];
            let mut used = vec![false; prepared.len()];
            let mut assigned = 0;
            for &(d, zi, i) in &pairs {
                if chosen[zi as usize].is_none() && !used[i as usize] {
                    chosen[zi as usize] = Some((i, d));
                    used[i as usize] = true;
                    assigned += 1;
                    if assigned == nd {
                        break;
                    }
                }
            }
            for (zi, slot) in chosen.iter().enumerate() {
                let (i, d) = slot.expect("pool >= |D| guarantees full assignment");
                match prepared.sources[i as usize] {
                    SourceSet::A => into_a += 1.0,
                    SourceSet::B => into_b += 1.0,
                }
                sink(zi, &[(i, d, 1.0)]);
            }
        }
    }
    Ok((into_a, into_b))
}

/// Matches every element of D against the pool A u B.
///
/// With replacement, each D element independently receives its
/// `nearest_matches`. Balanced assignment instead walks all (D, pool) pairs
/// in ascending distance order and consumes each pool element at most once,
/// which keeps the implied transition coefficients inside [0, 1].
pub fn match_all(p: &PartitionedSample, spec: &MatchSpec) -> Result<MatchAssignment> {
    let stats = DatasetStats::from_units(p.units());
    let pool = pool_of(p);
    let mut per_d: Vec<DElementMatches> = p
        .set_d
        .iter()
        .map(|z| DElementMatches {
            d_id: z.id.clone(),
            entries: Vec::new(),
        })
        .collect();
    let (into_a, into_b) = run_matching(p, spec, &stats, &mut |zi, picked| {
        per_d[zi].entries = picked
            .iter()
            .map(|&(i, d, w)| MatchEntry {
                unit_id: pool[i as usize].unit.id.clone(),
                source: pool[i as usize].source,
                similarity: similarity(d),
                weight: w,
            })
            .collect();
    })?;
    Ok(MatchAssignment {
        per_d,
        weight_into_a: into_a,
        weight_into_b: into_b,
    })
}
