//! Probability-of-necessity bounds from paired tables and perturbation sweeps.
//!
//! PN is computed from a combined experimental + observational pair of 2x2
//! tables. The sweep operations perturb one cell (moving count between the
//! outcome rows of one column, so arm sizes stay fixed) and trace how the
//! estimates react, which is how the PN formula's fragility is contrasted
//! with the matching estimator's tables-only lower bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ContingencyTable, Regime};

/// Tian-Pearl bounds on PN, raw and clipped to [0, 1], with inputs echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PNResult {
    pub pn_lower: f64,
    pub pn_upper: f64,
    pub raw_lower: f64,
    pub raw_upper: f64,
    pub experimental: ContingencyTable,
    pub observational: ContingencyTable,
}

/// One estimator value per perturbation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: i64,
    pub value: f64,
}

/// A sensitivity curve: estimator values across a k range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub estimator: SweepEstimator,
    pub cell: CellTarget,
    pub points: Vec<SweepPoint>,
}

/// Which estimator a sweep traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepEstimator {
    PnLower,
    PcLowerExperimental,
}

impl std::str::FromStr for SweepEstimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pn_lower" => Ok(SweepEstimator::PnLower),
            "pc_lower_experimental" => Ok(SweepEstimator::PcLowerExperimental),
            other => Err(format!(
                "unknown estimator {other:?} (expected pn_lower or pc_lower_experimental)"
            )),
        }
    }
}

impl std::fmt::Display for SweepEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepEstimator::PnLower => write!(f, "pn_lower"),
            SweepEstimator::PcLowerExperimental => write!(f, "pc_lower_experimental"),
        }
    }
}

/// A 2x2 cell named by its exposure/outcome combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Xy,
    XyNot,
    XNotY,
    XNotYNot,
}

impl Cell {
    /// The cell in the same exposure column with the opposite outcome; a
    /// perturbation moves count between a cell and its complement so the
    /// column total (the arm size) is preserved.
    fn complement(self) -> Cell {
        match self {
            Cell::Xy => Cell::XyNot,
            Cell::XyNot => Cell::Xy,
            Cell::XNotY => Cell::XNotYNot,
            Cell::XNotYNot => Cell::XNotY,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Cell::Xy => "xy",
            Cell::XyNot => "xy_not",
            Cell::XNotY => "x_not_y",
            Cell::XNotYNot => "x_not_y_not",
        }
    }

    fn get(self, t: &ContingencyTable) -> u64 {
        match self {
            Cell::Xy => t.n_xy,
            Cell::XyNot => t.n_xy_not,
            Cell::XNotY => t.n_x_not_y,
            Cell::XNotYNot => t.n_x_not_y_not,
        }
    }

    fn set(self, t: &mut ContingencyTable, v: u64) {
        match self {
            Cell::Xy => t.n_xy = v,
            Cell::XyNot => t.n_xy_not = v,
            Cell::XNotY => t.n_x_not_y = v,
            Cell::XNotYNot => t.n_x_not_y_not = v,
        }
    }
}

impl std::str::FromStr for Cell {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "xy" => Ok(Cell::Xy),
            "xy'" | "xy_not" => Ok(Cell::XyNot),
            "x'y" | "x_not_y" => Ok(Cell::XNotY),
            "x'y'" | "x_not_y_not" => Ok(Cell::XNotYNot),
            other => Err(format!(
                "unknown cell {other:?} (expected xy, xy', x'y, or x'y')"
            )),
        }
    }
}

/// A cell plus which table (by regime) it lives in, e.g. "x'y@experimental".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellTarget {
    pub cell: Cell,
    pub regime: Regime,
}

impl std::str::FromStr for CellTarget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (cell, regime) = s
            .split_once('@')
            .ok_or_else(|| format!("expected <cell>@<regime>, got {s:?}"))?;
        Ok(CellTarget {
            cell: cell.parse()?,
            regime: regime.parse()?,
        })
    }
}

/// Moves k units of count from the complement row into `cell` (negative k
/// moves the other way), preserving the column total. Errors when either
/// count would go negative.
pub fn perturb(t: &ContingencyTable, cell: Cell, k: i64) -> Result<ContingencyTable> {
    let comp = cell.complement();
    let target = cell.get(t) as i64 + k;
    let other = comp.get(t) as i64 - k;
    if target < 0 {
        return Err(Error::NegativeCell {
            cell: cell.name(),
            k,
        });
    }
    if other < 0 {
        return Err(Error::NegativeCell {
            cell: comp.name(),
            k,
        });
    }
    let mut out = *t;
    cell.set(&mut out, target as u64);
    comp.set(&mut out, other as u64);
    Ok(out)
}

fn check_regime(t: &ContingencyTable, expected: Regime, role: &'static str) -> Result<()> {
    if t.regime != expected {
        let name = |r: Regime| match r {
            Regime::Experimental => "experimental",
            Regime::Observational => "observational",
        };
        return Err(Error::WrongRegime {
            role,
            expected: name(expected),
            got: name(t.regime),
        });
    }
    Ok(())
}

/// Tian-Pearl bounds on PN from an experimental + observational table pair:
///
/// lower = (P(y) - P(y | do(x'))) / P(x, y)
/// upper = (P(y' | do(x')) - P(x', y')) / P(x, y)
///
/// P(y), P(x,y), P(x',y') come from the observational table; the do()
/// quantities from the experimental one. Both bounds are evaluated as single
/// divisions of exact integer products and then clipped to [0, 1], so equal
/// rationals always yield identical doubles.
pub fn pn_bounds(
    experimental: &ContingencyTable,
    observational: &ContingencyTable,
) -> Result<PNResult> {
    check_regime(experimental, Regime::Experimental, "experimental input")?;
    check_regime(observational, Regime::Observational, "observational input")?;
    if observational.n_xy == 0 {
        return Err(Error::PnUndefined);
    }
    let n0e = experimental.n_unexposed();
    if experimental.n_exposed() == 0 {
        return Err(Error::EmptyArm { arm: "exposed" });
    }
    if n0e == 0 {
        return Err(Error::EmptyArm { arm: "unexposed" });
    }
    let t_o = observational.total();
    let y_o = observational.n_xy + observational.n_x_not_y;
    // lower = (y_o/t_o - b_e/n0e) / (n_xy/t_o), cross-multiplied by t_o*n0e.
    let num_l = y_o as i128 * n0e as i128 - experimental.n_x_not_y as i128 * t_o as i128;
    // upper = (a_e/n0e - a_o/t_o) / (n_xy/t_o), same denominator.
    let num_u = experimental.n_x_not_y_not as i128 * t_o as i128
        - observational.n_x_not_y_not as i128 * n0e as i128;
    let den = (observational.n_xy * n0e) as i128;
    let raw_lower = num_l as f64 / den as f64;
    let raw_upper = num_u as f64 / den as f64;
    Ok(PNResult {
        pn_lower: raw_lower.clamp(0.0, 1.0),
        pn_upper: raw_upper.clamp(0.0, 1.0),
        raw_lower,
        raw_upper,
        experimental: *experimental,
        observational: *observational,
    })
}

/// The matching-side contrast: PC's lower bound computed from the
/// experimental table alone, max{0, 1 - P(y|do(x')) / P(y|do(x))}. Evaluated
/// in the same exact-rational style as `pn_bounds`.
pub fn pc_lower_experimental(t: &ContingencyTable) -> Result<f64> {
    let d = t.n_xy;
    let b = t.n_x_not_y;
    let n1 = t.n_exposed();
    let n0 = t.n_unexposed();
    if n1 == 0 {
        return Err(Error::EmptyArm { arm: "exposed" });
    }
    if n0 == 0 {
        return Err(Error::EmptyArm { arm: "unexposed" });
    }
    if d == 0 {
        return Err(Error::ExperimentalRateZero);
    }
    let dn0 = d * n0;
    let bn1 = b * n1;
    Ok(if bn1 >= dn0 {
        0.0
    } else {
        (dn0 - bn1) as f64 / dn0 as f64
    })
}

/// Traces an estimator while one cell is perturbed over `k_range`. The
/// observational table is only needed for the pn_lower estimator.
pub fn sensitivity_sweep(
    experimental: &ContingencyTable,
    observational: Option<&ContingencyTable>,
    target: CellTarget,
    k_range: std::ops::RangeInclusive<i64>,
    estimator: SweepEstimator,
) -> Result<SweepCurve> {
    check_regime(experimental, Regime::Experimental, "experimental input")?;
    if estimator == SweepEstimator::PnLower && observational.is_none() {
        return Err(Error::MissingObservational {
            estimator: "pn_lower",
        });
    }
    let mut points = Vec::new();
    for k in k_range {
        let (exp_k, obs_k) = match target.regime {
            Regime::Experimental => (perturb(experimental, target.cell, k)?, observational.copied()),
            Regime::Observational => {
                let obs = observational.ok_or(Error::MissingObservational {
                    estimator: "observational-cell sweep",
                })?;
                (*experimental, Some(perturb(obs, target.cell, k)?))
            }
        };
        let value = match estimator {
            SweepEstimator::PnLower => {
                pn_bounds(&exp_k, obs_k.as_ref().expect("checked above"))?.pn_lower
            }
            SweepEstimator::PcLowerExperimental => pc_lower_experimental(&exp_k)?,
        };
        points.push(SweepPoint { k, value });
    }
    Ok(SweepCurve {
        estimator,
        cell: target,
        points,
    })
}
