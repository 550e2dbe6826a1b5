//! PC point estimates, transition coefficients, risk ratio, and bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{credit_weights, DatasetStats, MatchMode, MatchSpec};
use crate::model::{contingency_from_partition, ContingencyTable, PartitionedSample, Regime, SetCounts};

/// Serialize a risk ratio that may be +infinity: JSON has no inf literal, so
/// the infinite case becomes the string "inf" and round-trips back to f64.
pub mod rr_serde {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum NumOrInf {
            Num(f64),
            Tag(String),
        }
        match NumOrInf::deserialize(d)? {
            NumOrInf::Num(v) => Ok(v),
            NumOrInf::Tag(t) if t == "inf" => Ok(f64::INFINITY),
            NumOrInf::Tag(t) => Err(D::Error::custom(format!("expected number or \"inf\", got {t:?}"))),
        }
    }
}

/// A full PC estimate with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PCEstimate {
    /// Fraction of D's match credit landing in A.
    pub pc_raw: f64,
    /// pc_raw clipped into the theoretical bounds.
    pub pc_clamped: f64,
    /// Transition coefficient a: fraction of A matched into D.
    pub a: f64,
    /// Transition coefficient b: fraction of B matched into D (0 when B is
    /// empty).
    pub b: f64,
    /// Risk ratio; +infinity when B is empty.
    #[serde(with = "rr_serde")]
    pub rr: f64,
    pub bound_lower: f64,
    pub bound_upper: f64,
    /// True when pc_raw fell meaningfully outside the theoretical bounds and
    /// had to be clipped. With-replacement matching can do this (a single A
    /// element may absorb many D elements); it signals a violated model
    /// assumption the analyst should look at.
    pub out_of_bounds_flag: bool,
    pub counts: SetCounts,
    pub spec: MatchSpec,
    /// Aggregate credit weight counted into A by the actual assignment. In
    /// balanced mode this is an integer-valued count.
    pub counted_weight_a: f64,
    /// Aggregate credit weight counted into B.
    pub counted_weight_b: f64,
    /// Whether the arms had equal size. The estimator's within-arm algebra
    /// assumes balance; the estimate is still produced on unbalanced arms,
    /// with this flag cleared as a warning.
    pub arms_balanced: bool,
    /// Populated by the individual-query path: how many D elements survived
    /// the similarity filter.
    pub retained_d: Option<usize>,
}

/// Quotient of two integer-valued products, computed with a single floating
/// division so the result is the correctly rounded rational. Counts here are
/// small enough (products below 2^53) that the products themselves are exact.
fn exact_ratio(num: u64, den: u64) -> f64 {
    num as f64 / den as f64
}

/// Risk ratio RR = P(y|x) / P(y|x') = (|D|/n1) / (|B|/n0), as one exact
/// rational division of counts. Returns +infinity when |B| = 0 and |D| > 0;
/// errors when both death cells are empty (0/0).
pub fn risk_ratio(t: &ContingencyTable) -> Result<f64> {
    let d = t.n_xy;
    let b = t.n_x_not_y;
    if b == 0 && d == 0 {
        return Err(Error::RiskRatioUndefined);
    }
    let n1 = t.n_exposed();
    let n0 = t.n_unexposed();
    if n1 == 0 {
        return Err(Error::EmptyArm { arm: "exposed" });
    }
    if n0 == 0 {
        return Err(Error::EmptyArm { arm: "unexposed" });
    }
    if b == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(exact_ratio(d * n0, b * n1))
}

/// Theoretical bounds on PC:
///
/// lower = max{0, 1 - 1/RR} = max{0, (|D| n0 - |B| n1) / (|D| n0)}
/// upper = min{1, P(y'|x') / P(y|x)} = min{1, (|A| n1) / (|D| n0)}
///
/// Each side is evaluated as a single division of exact integer products, so
/// equal rationals always produce identical doubles.
pub fn pc_bounds(t: &ContingencyTable) -> Result<(f64, f64)> {
    let d = t.n_xy;
    let a = t.n_x_not_y_not;
    let b = t.n_x_not_y;
    if d == 0 {
        return Err(Error::NoPositiveCases);
    }
    let n1 = t.n_exposed();
    let n0 = t.n_unexposed();
    if n0 == 0 {
        return Err(Error::EmptyArm { arm: "unexposed" });
    }
    let dn0 = d * n0;
    let bn1 = b * n1;
    let lower = if bn1 >= dn0 {
        0.0
    } else {
        exact_ratio(dn0 - bn1, dn0)
    };
    let an1 = a * n1;
    let upper = if an1 >= dn0 { 1.0 } else { exact_ratio(an1, dn0) };
    Ok((lower, upper))
}

/// PC from the transition coefficient b and the risk ratio:
/// PC = 1 - b/RR. Accepts rr = +infinity (giving 1).
pub fn pc_from_coefficients(b: f64, rr: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&b) || b.is_nan() {
        return Err(Error::OutOfDomain {
            what: "coefficient b",
            domain: "[0, 1]",
            value: b,
        });
    }
    if !(rr > 0.0) {
        return Err(Error::OutOfDomain {
            what: "risk ratio",
            domain: "(0, +inf]",
            value: rr,
        });
    }
    Ok(1.0 - b / rr)
}

/// PC under the monotonicity assumption (no B element would have died
/// exposed... reversed): b is forced to 1 and PC collapses to the single
/// value 1 - 1/RR. Infeasible when |B| > |D|.
pub fn pc_under_monotonicity(t: &ContingencyTable) -> Result<f64> {
    if t.n_x_not_y > t.n_xy {
        return Err(Error::MonotonicityInfeasible {
            b: t.n_x_not_y as usize,
            d: t.n_xy as usize,
        });
    }
    pc_from_coefficients(1.0, risk_ratio(t)?)
}

/// PC under the reverse-monotonicity assumption (every B element maps into
/// C): PC is exactly 1. Infeasible when |B| > |C|.
pub fn pc_under_reverse_monotonicity(t: &ContingencyTable) -> Result<f64> {
    if t.n_x_not_y > t.n_xy_not {
        return Err(Error::ReverseMonotonicityInfeasible {
            b: t.n_x_not_y as usize,
            c: t.n_xy_not as usize,
        });
    }
    Ok(1.0)
}

/// Absolute slack allowed before the out-of-bounds diagnostic fires; smaller
/// discrepancies are indistinguishable from credit-summation roundoff.
const BOUNDS_SLACK: f64 = 1e-12;

/// Estimates PC by matching every exposed death against the unexposed pool.
///
/// pc_raw is the average credit into A per D element; for m = 1 without ties
/// this is simply the fraction of D whose nearest neighbor lies in A. The
/// transition coefficients follow the mode:
///
/// * with_replacement: derived algebraically (a = pc_raw |D| / |A|,
///   b = (1 - pc_raw) |D| / |B|) so that a|A| + b|B| = |D| holds by
///   construction;
/// * balanced_assignment: counted directly from the one-to-one assignment,
///   which pins both coefficients inside [0, 1].
pub fn estimate_pc(p: &PartitionedSample, spec: &MatchSpec) -> Result<PCEstimate> {
    spec.validate()?;
    let stats = DatasetStats::from_units(p.units());
    let (w_a, w_b) = credit_weights(p, spec, &stats)?;
    let counts = p.counts();
    let d = counts.d as f64;
    let pc_raw = (w_a / d).clamp(0.0, 1.0);
    let (a, b) = match spec.mode {
        MatchMode::BalancedAssignment => (
            if counts.a > 0 { w_a / counts.a as f64 } else { 0.0 },
            if counts.b > 0 { w_b / counts.b as f64 } else { 0.0 },
        ),
        MatchMode::WithReplacement => (
            if counts.a > 0 {
                pc_raw * d / counts.a as f64
            } else {
                0.0
            },
            if counts.b > 0 {
                (1.0 - pc_raw) * d / counts.b as f64
            } else {
                0.0
            },
        ),
    };
    let table = contingency_from_partition(p, Regime::Observational);
    let (bound_lower, bound_upper) = pc_bounds(&table)?;
    let rr = risk_ratio(&table)?;
    let out_of_bounds_flag =
        pc_raw < bound_lower - BOUNDS_SLACK || pc_raw > bound_upper + BOUNDS_SLACK;
    Ok(PCEstimate {
        pc_raw,
        pc_clamped: pc_raw.clamp(bound_lower, bound_upper),
        a,
        b,
        rr,
        bound_lower,
        bound_upper,
        out_of_bounds_flag,
        counts,
        spec: *spec,
        counted_weight_a: w_a,
        counted_weight_b: w_b,
        arms_balanced: p.arms_balanced(),
        retained_d: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{Metric, TieRule};
    use crate::model::{partition_dataset, Unit};

    fn table(d: u64, c: u64, b: u64, a: u64) -> ContingencyTable {
        ContingencyTable::new(d, c, b, a, Regime::Experimental).unwrap()
    }

    fn one_cov_partition(
        a: &[(&str, f64)],
        b: &[(&str, f64)],
        c: &[(&str, f64)],
        d: &[(&str, f64)],
    ) -> PartitionedSample {
        let mut units = Vec::new();
        for &(id, v) in a {
            units.push(Unit::new(id, 0, 0, vec![v]).unwrap());
        }
        for &(id, v) in b {
            units.push(Unit::new(id, 0, 1, vec![v]).unwrap());
        }
        for &(id, v) in c {
            units.push(Unit::new(id, 1, 0, vec![v]).unwrap());
        }
        for &(id, v) in d {
            units.push(Unit::new(id, 1, 1, vec![v]).unwrap());
        }
        partition_dataset(&units).unwrap()
    }

    fn abs_spec() -> MatchSpec {
        MatchSpec {
            metric: Metric::AbsoluteDifference,
            ..MatchSpec::default()
        }
    }

    #[test]
    fn small_partition_estimate() {
        let p = one_cov_partition(
            &[("a1", 1.0), ("a2", 2.0)],
            &[("b1", 10.0)],
            &[],
            &[("d1", 1.1), ("d2", 9.0)],
        );
        let e = estimate_pc(&p, &abs_spec()).unwrap();
        assert_eq!(e.pc_raw, 0.5);
        assert_eq!(e.a, 0.5);
        assert_eq!(e.b, 1.0);
        // Conservation identity: a|A| + b|B| = |D|.
        assert_eq!(e.a * 2.0 + e.b * 1.0, 2.0);
        assert_eq!(e.counted_weight_a, 1.0);
        assert_eq!(e.counted_weight_b, 1.0);
        assert!(!e.arms_balanced, "2 exposed vs 3 unexposed");
    }

    #[test]
    fn coincident_d_yields_pc_one() {
        let p = one_cov_partition(
            &[("a1", 4.0)],
            &[("b1", 50.0)],
            &[],
            &[("d1", 4.0), ("d2", 4.0)],
        );
        let e = estimate_pc(&p, &abs_spec()).unwrap();
        assert_eq!(e.pc_raw, 1.0);
    }

    #[test]
    fn empty_d_rejected() {
        let p = one_cov_partition(&[("a1", 0.0)], &[], &[("c1", 0.0)], &[]);
        assert!(matches!(
            estimate_pc(&p, &abs_spec()),
            Err(Error::NoPositiveCases)
        ));
    }

    #[test]
    fn empty_a_forces_pc_zero() {
        let p = one_cov_partition(&[], &[("b1", 0.0)], &[], &[("d1", 0.0)]);
        let e = estimate_pc(&p, &abs_spec()).unwrap();
        assert_eq!(e.pc_raw, 0.0);
        assert_eq!(e.a, 0.0);
    }

    #[test]
    fn risk_ratio_drug_trial() {
        // 16 vs 14 deaths in 1000-per-arm: RR = 0.016/0.014 = 8/7.
        let t = table(16, 984, 14, 986);
        assert_eq!(risk_ratio(&t).unwrap(), 8.0 / 7.0);
    }

    #[test]
    fn risk_ratio_strong_effect() {
        let t = table(30, 70, 12, 88);
        assert_eq!(risk_ratio(&t).unwrap(), 2.5);
    }

    #[test]
    fn risk_ratio_unity() {
        let t = table(5, 95, 5, 95);
        assert_eq!(risk_ratio(&t).unwrap(), 1.0);
    }

    #[test]
    fn risk_ratio_infinite_when_b_empty() {
        let t = table(3, 97, 0, 100);
        assert_eq!(risk_ratio(&t).unwrap(), f64::INFINITY);
    }

    #[test]
    fn risk_ratio_zero_over_zero_rejected() {
        let t = table(0, 100, 0, 100);
        assert!(matches!(risk_ratio(&t), Err(Error::RiskRatioUndefined)));
    }

    #[test]
    fn bounds_drug_trial() {
        let t = table(16, 984, 14, 986);
        let (lo, hi) = pc_bounds(&t).unwrap();
        assert_eq!(lo, 0.125);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn bounds_strong_effect() {
        let t = table(30, 70, 12, 88);
        let (lo, hi) = pc_bounds(&t).unwrap();
        assert_eq!(lo, 0.6);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn bounds_null_effect() {
        let t = table(10, 90, 10, 90);
        let (lo, hi) = pc_bounds(&t).unwrap();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn bounds_infinite_rr_pins_lower_to_one() {
        let t = table(40, 60, 0, 100);
        let (lo, hi) = pc_bounds(&t).unwrap();
        assert_eq!(lo, 1.0);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn bounds_need_d() {
        let t = table(0, 100, 5, 95);
        assert!(matches!(pc_bounds(&t), Err(Error::NoPositiveCases)));
    }

    #[test]
    fn upper_bound_binds_when_a_is_scarce() {
        // |A| = 10 of n0 = 100 vs |D| = 50 of n1 = 100: upper = 0.1/0.5 = 0.2.
        let t = table(50, 50, 90, 10);
        let (_, hi) = pc_bounds(&t).unwrap();
        assert_eq!(hi, 0.2);
    }

    #[test]
    fn bounds_are_ordered_on_random_tables() {
        // lower <= upper always: D/n1 <= 1 implies D/n1 - B/n0 <= A/n0.
        let mut s = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            s
        };
        for _ in 0..2000 {
            let d = next() % 50 + 1;
            let c = next() % 50;
            let b = next() % 50;
            let a = next() % 50;
            if a + b == 0 {
                continue;
            }
            let t = table(d, c, b, a);
            let (lo, hi) = pc_bounds(&t).unwrap();
            assert!(lo <= hi, "{t:?} gave ({lo}, {hi})");
            assert!((0.0..=1.0).contains(&lo));
            assert!((0.0..=1.0).contains(&hi));
        }
    }

    #[test]
    fn monotonicity_value() {
        let t = table(30, 70, 12, 88);
        assert_eq!(pc_under_monotonicity(&t).unwrap(), 0.6);
    }

    #[test]
    fn monotonicity_null_effect_gives_zero() {
        let t = table(10, 90, 10, 90);
        assert_eq!(pc_under_monotonicity(&t).unwrap(), 0.0);
    }

    #[test]
    fn monotonicity_infeasible_when_b_exceeds_d() {
        let t = table(5, 95, 20, 80);
        assert!(matches!(
            pc_under_monotonicity(&t),
            Err(Error::MonotonicityInfeasible { b: 20, d: 5 })
        ));
    }

    #[test]
    fn reverse_monotonicity_value_and_feasibility() {
        assert_eq!(pc_under_reverse_monotonicity(&table(5, 50, 20, 80)).unwrap(), 1.0);
        assert_eq!(pc_under_reverse_monotonicity(&table(5, 50, 0, 100)).unwrap(), 1.0);
        assert!(matches!(
            pc_under_reverse_monotonicity(&table(5, 10, 20, 80)),
            Err(Error::ReverseMonotonicityInfeasible { b: 20, c: 10 })
        ));
    }

    #[test]
    fn coefficients_formula() {
        assert_eq!(pc_from_coefficients(1.0, 2.5).unwrap(), 0.6);
        assert_eq!(pc_from_coefficients(0.0, 3.0).unwrap(), 1.0);
        assert_eq!(pc_from_coefficients(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(pc_from_coefficients(0.5, f64::INFINITY).unwrap(), 1.0);
        assert!(pc_from_coefficients(1.5, 2.0).is_err());
        assert!(pc_from_coefficients(0.5, 0.0).is_err());
        assert!(pc_from_coefficients(0.5, -1.0).is_err());
    }

    #[test]
    fn monotonicity_equals_forced_coefficient() {
        let tables = [
            table(30, 70, 12, 88),
            table(16, 984, 14, 986),
            table(10, 0, 3, 7),
            table(50, 50, 0, 100),
        ];
        for t in tables {
            let got = pc_under_monotonicity(&t).unwrap();
            let forced = pc_from_coefficients(1.0, risk_ratio(&t).unwrap()).unwrap();
            assert_eq!(got, forced, "{t:?}");
        }
    }

    #[test]
    fn out_of_bounds_flag_fires_on_violation() {
        // One A element absorbs every D element under replacement: pc_raw = 1
        // but the upper bound is |A|/n0 / (|D|/n1) = (1/6)/(5/5)... well below 1.
        let p = one_cov_partition(
            &[("a1", 0.0)],
            &[
                ("b1", 90.0),
                ("b2", 91.0),
                ("b3", 92.0),
                ("b4", 93.0),
                ("b5", 94.0),
            ],
            &[],
            &[
                ("d1", 0.0),
                ("d2", 0.0),
                ("d3", 0.0),
                ("d4", 0.0),
                ("d5", 0.0),
            ],
        );
        let e = estimate_pc(&p, &abs_spec()).unwrap();
        assert_eq!(e.pc_raw, 1.0);
        assert!(e.out_of_bounds_flag);
        assert_eq!(e.pc_clamped, e.bound_upper);
        assert!(e.pc_clamped < 1.0);
    }

    #[test]
    fn balanced_mode_stays_in_bounds_on_balanced_arms() {
        // With equal arms, counting arguments pin balanced-mode pc_raw inside
        // the theoretical bounds: wA <= |A| gives the upper bound and
        // wB <= |B| the lower one.
        let p = one_cov_partition(
            &[("a1", 0.0)],
            &[
                ("b1", 90.0),
                ("b2", 91.0),
                ("b3", 92.0),
                ("b4", 93.0),
                ("b5", 94.0),
            ],
            &[("c1", 50.0)],
            &[
                ("d1", 0.0),
                ("d2", 0.0),
                ("d3", 0.0),
                ("d4", 0.0),
                ("d5", 0.0),
            ],
        );
        let spec = MatchSpec {
            metric: Metric::AbsoluteDifference,
            mode: MatchMode::BalancedAssignment,
            ..MatchSpec::default()
        };
        let e = estimate_pc(&p, &spec).unwrap();
        assert!(e.arms_balanced);
        assert!((0.0..=1.0).contains(&e.a));
        assert!((0.0..=1.0).contains(&e.b));
        // Counted weights are integers summing to |D| exactly.
        assert_eq!(e.counted_weight_a + e.counted_weight_b, 5.0);
        assert_eq!(e.counted_weight_a, 1.0);
        assert_eq!(e.pc_raw, 0.2);
        assert_eq!(e.bound_upper, 0.2);
        assert!(!e.out_of_bounds_flag);
    }

    #[test]
    fn balanced_mode_can_exceed_bounds_on_unbalanced_arms() {
        // Drop the C unit: n0 = 6 vs n1 = 5. The upper bound picks up an
        // n1/n0 factor (5/30 < 1/5), so the same assignment now lands above
        // it and the estimate must say so.
        let p = one_cov_partition(
            &[("a1", 0.0)],
            &[
                ("b1", 90.0),
                ("b2", 91.0),
                ("b3", 92.0),
                ("b4", 93.0),
                ("b5", 94.0),
            ],
            &[],
            &[
                ("d1", 0.0),
                ("d2", 0.0),
                ("d3", 0.0),
                ("d4", 0.0),
                ("d5", 0.0),
            ],
        );
        let spec = MatchSpec {
            metric: Metric::AbsoluteDifference,
            mode: MatchMode::BalancedAssignment,
            ..MatchSpec::default()
        };
        let e = estimate_pc(&p, &spec).unwrap();
        assert!(!e.arms_balanced);
        assert_eq!(e.pc_raw, 0.2);
        assert_eq!(e.bound_upper, 5.0 / 30.0);
        assert!(e.out_of_bounds_flag);
        assert_eq!(e.pc_clamped, e.bound_upper);
    }

    #[test]
    fn rr_serde_round_trips_infinity() {
        let t = table(3, 97, 0, 100);
        let p = one_cov_partition(&[("a1", 0.0)], &[], &[("c1", 1.0)], &[("d1", 0.0)]);
        let mut e = estimate_pc(&p, &abs_spec()).unwrap();
        e.rr = risk_ratio(&t).unwrap();
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"rr\":\"inf\""));
        let back: PCEstimate = serde_json::from_str(&json).unwrap();
        assert_eq!(back.rr, f64::INFINITY);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Consistency: pc_raw == 1 - b|B|/|D| with the back-derived b.
            #[test]
            fn identity_chain_holds(
                a_vals in prop::collection::vec(0.0..1.0f64, 1..8),
                b_vals in prop::collection::vec(0.0..1.0f64, 1..8),
                d_vals in prop::collection::vec(0.0..1.0f64, 1..8),
                m in 1usize..4,
                lowest in proptest::bool::ANY,
            ) {
                let a: Vec<(String, f64)> = a_vals.iter().enumerate().map(|(i, &v)| (format!("a{i}"), v)).collect();
                let b: Vec<(String, f64)> = b_vals.iter().enumerate().map(|(i, &v)| (format!("b{i}"), v)).collect();
                let d: Vec<(String, f64)> = d_vals.iter().enumerate().map(|(i, &v)| (format!("d{i}"), v)).collect();
                let to_refs = |v: &[(String, f64)]| -> Vec<(String, f64)> { v.to_vec() };
                let mut units = Vec::new();
                for (id, v) in to_refs(&a) { units.push(Unit::new(id, 0, 0, vec![v]).unwrap()); }
                for (id, v) in to_refs(&b) { units.push(Unit::new(id, 0, 1, vec![v]).unwrap()); }
                for (id, v) in to_refs(&d) { units.push(Unit::new(id, 1, 1, vec![v]).unwrap()); }
                let p = partition_dataset(&units).unwrap();
                let spec = MatchSpec {
                    metric: Metric::AbsoluteDifference,
                    m,
                    tie_rule: if lowest { TieRule::LowestId } else { TieRule::Fractional },
                    ..MatchSpec::default()
                };
                let e = estimate_pc(&p, &spec).unwrap();
                prop_assert!((0.0..=1.0).contains(&e.pc_raw));
                prop_assert!(e.pc_clamped >= e.bound_lower && e.pc_clamped <= e.bound_upper);
                prop_assert!(e.bound_lower <= e.bound_upper);
                let back = 1.0 - e.b * b.len() as f64 / d.len() as f64;
                prop_assert!((e.pc_raw - back).abs() <= 1e-12, "pc_raw {} vs {}", e.pc_raw, back);
            }
        }
    }
}
