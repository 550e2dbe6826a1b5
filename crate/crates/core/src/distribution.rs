//! PC distributions from bootstrap, repeated sampling, and matcher ensembles.
//!
//! All three constructions share the same reproducibility scheme: iteration i
//! draws from `ChaCha8` seeded with the master seed on stream i + 1, so
//! iterations are order-independent and the whole distribution is a pure
//! function of (inputs, seed).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::estimate_pc;
use crate::matching::MatchSpec;
use crate::model::{partition_dataset, Unit};

/// Target outcome proportions within each arm for stratified resampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrataRatios {
    /// Target P(y = 1) among unexposed draws (splits the arm into B vs A).
    pub p_effect_given_cause0: f64,
    /// Target P(y = 1) among exposed draws (splits the arm into D vs C).
    pub p_effect_given_cause1: f64,
}

impl StrataRatios {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("p_effect_given_cause0", self.p_effect_given_cause0),
            ("p_effect_given_cause1", self.p_effect_given_cause1),
        ] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(Error::BadGeneratorParam {
                    what,
                    domain: "[0, 1]",
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// One successful iteration of a distribution run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationSample {
    pub iteration: usize,
    pub pc_raw: f64,
    pub pc_clamped: f64,
    pub bound_lower: f64,
    pub bound_upper: f64,
}

/// An iteration that failed to produce an estimate, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedIteration {
    pub iteration: usize,
    pub reason: String,
}

/// Summary of a sample list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub median: f64,
    pub iqr: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// A PC distribution: per-iteration samples of pc_raw with their bounds, the
/// summary over pc_raw, and the bound envelope (min of lowers, max of uppers)
/// across iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PCDistribution {
    pub samples: Vec<IterationSample>,
    pub skipped: Vec<SkippedIteration>,
    pub summary: SummaryStats,
    pub envelope_lower: f64,
    pub envelope_upper: f64,
    pub iterations: usize,
    pub master_seed: u64,
}

impl PCDistribution {
    /// The pc_raw series, in iteration order.
    pub fn pc_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.pc_raw).collect()
    }
}

/// The RNG for one iteration: master seed, stream i + 1. Stream 0 is left
/// for any single-draw uses of the same master seed.
fn iteration_rng(master_seed: u64, iteration: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(iteration as u64 + 1);
    rng
}

/// Median (midpoint rule), IQR (linear-interpolation quartiles), sample sd
/// (n - 1 denominator, 0 for a single sample), min, and max.
pub fn summarize(samples: &[f64]) -> Result<SummaryStats> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    // Quantile with linear interpolation between order statistics: the q-th
    // quantile sits at rank h = (n - 1) q.
    let quantile = |q: f64| -> f64 {
        let h = (n - 1) as f64 * q;
        let lo = h.floor() as usize;
        let frac = h - lo as f64;
        if lo + 1 < n {
            sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
        } else {
            sorted[lo]
        }
    };
    // Constant samples get exact zeros: the naive mean of n copies of x can
    // round away from x, leaving a spurious residual in the sd.
    let constant = sorted[0] == sorted[n - 1];
    let iqr = if constant {
        0.0
    } else {
        quantile(0.75) - quantile(0.25)
    };
    let sd = if n > 1 && !constant {
        let mean = sorted.iter().sum::<f64>() / n as f64;
        (sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SummaryStats {
        median,
        iqr,
        sd,
        min: sorted[0],
        max: sorted[n - 1],
    })
}

/// Integer quotas for `fractions` of `total` by largest-remainder rounding:
/// floor each share, then hand the leftover units to the largest fractional
/// parts (earlier entries win ties). Quotas always sum to `total`.
pub fn largest_remainder(fractions: &[f64], total: usize) -> Vec<usize> {
    let mut quotas: Vec<usize> = Vec::with_capacity(fractions.len());
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(fractions.len());
    let mut assigned = 0usize;
    for (i, &f) in fractions.iter().enumerate() {
        let share = f * total as f64;
        let floor = share.floor() as usize;
        quotas.push(floor);
        assigned += floor;
        remainders.push((share - floor as f64, i));
    }
    let mut leftover = total.saturating_sub(assigned);
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    for &(_, i) in &remainders {
        if leftover == 0 {
            break;
        }
        quotas[i] += 1;
        leftover -= 1;
    }
    quotas
}

/// Splits units by exposure, preserving input order.
fn split_arms(units: &[Unit]) -> (Vec<&Unit>, Vec<&Unit>) {
    let arm0 = units.iter().filter(|u| u.x == 0).collect();
    let arm1 = units.iter().filter(|u| u.x == 1).collect();
    (arm0, arm1)
}

/// Draws `arm.len()` units from an arm with replacement. Drawn units get
/// fresh position-prefixed ids so the resampled dataset keeps the unique-id
/// invariant even when one source unit is drawn twice.
fn resample_arm_with_replacement(
    arm: &[&Unit],
    position: &mut usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Unit>,
) {
    for _ in 0..arm.len() {
        let pick = arm[rng.gen_range(0..arm.len())];
        let mut u = pick.clone();
        u.id = format!("{:06}-{}", *position, pick.id);
        *position += 1;
        out.push(u);
    }
}

/// Draws `amount` distinct units from a pool without replacement, preserving
/// original ids (distinctness keeps them unique).
fn draw_without_replacement(
    pool: &[&Unit],
    amount: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Unit>,
) {
    let idx = rand::seq::index::sample(rng, pool.len(), amount);
    for i in idx.iter() {
        out.push(pool[i].clone());
    }
}

/// Shared tail of all distribution constructors: run the per-iteration
/// closure, collect samples and skips, enforce the majority rule, summarize.
fn collect_distribution(
    iterations: usize,
    master_seed: u64,
    mut one: impl FnMut(usize) -> Result<(f64, f64, f64, f64)>,
) -> Result<PCDistribution> {
    if iterations == 0 {
        return Err(Error::OutOfDomain {
            what: "iterations",
            domain: "[1, ..)",
            value: 0.0,
        });
    }
    let mut samples = Vec::with_capacity(iterations);
    let mut skipped = Vec::new();
    for i in 0..iterations {
        match one(i) {
            Ok((pc_raw, pc_clamped, lo, hi)) => samples.push(IterationSample {
                iteration: i,
                pc_raw,
                pc_clamped,
                bound_lower: lo,
                bound_upper: hi,
            }),
            Err(e) => skipped.push(SkippedIteration {
                iteration: i,
                reason: e.to_string(),
            }),
        }
    }
    if skipped.len() * 2 > iterations {
        return Err(Error::TooManySkipped {
            skipped: skipped.len(),
            total: iterations,
        });
    }
    let pc: Vec<f64> = samples.iter().map(|s| s.pc_raw).collect();
    let summary = summarize(&pc)?;
    let envelope_lower = samples
        .iter()
        .map(|s| s.bound_lower)
        .fold(f64::INFINITY, f64::min);
    let envelope_upper = samples
        .iter()
        .map(|s| s.bound_upper)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PCDistribution {
        samples,
        skipped,
        summary,
        envelope_lower,
        envelope_upper,
        iterations,
        master_seed,
    })
}

/// Bootstrap distribution: each iteration resamples both arms with
/// replacement at their original sizes (so arm balance is preserved),
/// re-partitions, and estimates PC.
pub fn bootstrap_distribution(
    units: &[Unit],
    spec: &MatchSpec,
    iterations: usize,
    seed: u64,
) -> Result<PCDistribution> {
    spec.validate()?;
    let p = partition_dataset(units)?;
    if p.set_d.is_empty() {
        return Err(Error::NoPositiveCases);
    }
    let (arm0, arm1) = split_arms(units);
    collect_distribution(iterations, seed, |i| {
        let mut rng = iteration_rng(seed, i);
        let mut sample = Vec::with_capacity(units.len());
        let mut position = 0usize;
        resample_arm_with_replacement(&arm0, &mut position, &mut rng, &mut sample);
        resample_arm_with_replacement(&arm1, &mut position, &mut rng, &mut sample);
        let p = partition_dataset(&sample)?;
        let e = estimate_pc(&p, spec)?;
        Ok((e.pc_raw, e.pc_clamped, e.bound_lower, e.bound_upper))
    })
}

/// Repeated-sampling distribution: each iteration draws `arm_size` units per
/// arm without replacement, either uniformly within the arm or per-cell via
/// largest-remainder quotas of the given strata ratios, then estimates PC.
///
/// Stratified quotas are computed once up front (order: y = 1 stratum first,
/// then y = 0) and drawn per cell in A, B, C, D order.
pub fn resampling_distribution(
    units: &[Unit],
    arm_size: usize,
    spec: &MatchSpec,
    iterations: usize,
    strata: Option<StrataRatios>,
    seed: u64,
) -> Result<PCDistribution> {
    spec.validate()?;
    if arm_size == 0 {
        return Err(Error::OutOfDomain {
            what: "arm_size",
            domain: "[1, ..)",
            value: 0.0,
        });
    }
    let p = partition_dataset(units)?;
    let quotas = match strata {
        None => {
            for (arm, have) in [("unexposed", p.n_unexposed()), ("exposed", p.n_exposed())] {
                if have < arm_size {
                    return Err(Error::ArmTooSmall {
                        arm,
                        requested: arm_size,
                        available: have,
                    });
                }
            }
            None
        }
        Some(r) => {
            r.validate()?;
            let q0 = largest_remainder(
                &[r.p_effect_given_cause0, 1.0 - r.p_effect_given_cause0],
                arm_size,
            );
            let q1 = largest_remainder(
                &[r.p_effect_given_cause1, 1.0 - r.p_effect_given_cause1],
                arm_size,
            );
            // (quota, cell name, population) in A, B, C, D order.
            let cells = [
                (q0[1], "A", p.set_a.len()),
                (q0[0], "B", p.set_b.len()),
                (q1[1], "C", p.set_c.len()),
                (q1[0], "D", p.set_d.len()),
            ];
            for &(quota, cell, available) in &cells {
                if quota > available {
                    return Err(Error::InsufficientCell {
                        cell,
                        required: quota,
                        available,
                    });
                }
            }
            Some((q0[1], q0[0], q1[1], q1[0]))
        }
    };
    let (arm0, arm1) = split_arms(units);
    let cell_a: Vec<&Unit> = p.set_a.iter().collect();
    let cell_b: Vec<&Unit> = p.set_b.iter().collect();
    let cell_c: Vec<&Unit> = p.set_c.iter().collect();
    let cell_d: Vec<&Unit> = p.set_d.iter().collect();
    collect_distribution(iterations, seed, |i| {
        let mut rng = iteration_rng(seed, i);
        let mut sample = Vec::with_capacity(arm_size * 2);
        match quotas {
            None => {
                draw_without_replacement(&arm0, arm_size, &mut rng, &mut sample);
                draw_without_replacement(&arm1, arm_size, &mut rng, &mut sample);
            }
            Some((qa, qb, qc, qd)) => {
                draw_without_replacement(&cell_a, qa, &mut rng, &mut sample);
                draw_without_replacement(&cell_b, qb, &mut rng, &mut sample);
                draw_without_replacement(&cell_c, qc, &mut rng, &mut sample);
                draw_without_replacement(&cell_d, qd, &mut rng, &mut sample);
            }
        }
        let p = partition_dataset(&sample)?;
        let e = estimate_pc(&p, spec)?;
        Ok((e.pc_raw, e.pc_clamped, e.bound_lower, e.bound_upper))
    })
}

/// Ensemble distribution: one PC sample per match specification, all on the
/// full dataset. The spread across specs shows how sensitive the estimate is
/// to the choice of matcher.
pub fn ensemble_distribution(
    units: &[Unit],
    specs: &[MatchSpec],
    seed: u64,
) -> Result<PCDistribution> {
    if specs.len() < 2 {
        return Err(Error::EnsembleTooSmall { got: specs.len() });
    }
    let p = partition_dataset(units)?;
    collect_distribution(specs.len(), seed, |i| {
        let e = estimate_pc(&p, &specs[i])?;
        Ok((e.pc_raw, e.pc_clamped, e.bound_lower, e.bound_upper))
    })
}
