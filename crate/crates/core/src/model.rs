//! Core data model: units, the four-set partition, and contingency tables.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single observation: binary exposure `x`, binary outcome `y`, and a
/// covariate vector shared (in length and meaning) across the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub id: String,
    pub x: u8,
    pub y: u8,
    pub covariates: Vec<f64>,
}

impl Unit {
    /// Builds a unit, rejecting non-binary exposure/outcome values and
    /// non-finite covariates.
    pub fn new(id: impl Into<String>, x: u8, y: u8, covariates: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if x > 1 {
            return Err(Error::NonBinary {
                id,
                field: "x",
                value: x.to_string(),
            });
        }
        if y > 1 {
            return Err(Error::NonBinary {
                id,
                field: "y",
                value: y.to_string(),
            });
        }
        if let Some(i) = covariates.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCovariate { id, index: i });
        }
        Ok(Unit { id, x, y, covariates })
    }
}

/// Which regime a contingency table was collected under. The arithmetic on
/// the table is the same either way; the regime matters when the table is fed
/// into the PN bounds, which need one of each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Experimental,
    Observational,
}

impl std::str::FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "experimental" => Ok(Regime::Experimental),
            "observational" => Ok(Regime::Observational),
            other => Err(format!(
                "unknown regime {other:?} (expected \"experimental\" or \"observational\")"
            )),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Experimental => write!(f, "experimental"),
            Regime::Observational => write!(f, "observational"),
        }
    }
}

/// A 2x2 exposure-by-outcome table. Cell names follow the convention that
/// `x` means exposed, `y` means the outcome occurred, and `_not` negates the
/// preceding symbol: `n_x_not_y` counts unexposed units with the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub n_xy: u64,
    pub n_xy_not: u64,
    pub n_x_not_y: u64,
    pub n_x_not_y_not: u64,
    pub regime: Regime,
}

impl ContingencyTable {
    /// Builds a table, rejecting the degenerate all-zero case.
    pub fn new(
        n_xy: u64,
        n_xy_not: u64,
        n_x_not_y: u64,
        n_x_not_y_not: u64,
        regime: Regime,
    ) -> Result<Self> {
        let t = ContingencyTable {
            n_xy,
            n_xy_not,
            n_x_not_y,
            n_x_not_y_not,
            regime,
        };
        if t.total() == 0 {
            return Err(Error::EmptyTable);
        }
        Ok(t)
    }

    /// Number of exposed units (the x column).
    pub fn n_exposed(&self) -> u64 {
        self.n_xy + self.n_xy_not
    }

    /// Number of unexposed units (the x' column).
    pub fn n_unexposed(&self) -> u64 {
        self.n_x_not_y + self.n_x_not_y_not
    }

    pub fn total(&self) -> u64 {
        self.n_exposed() + self.n_unexposed()
    }
}

/// Sizes of the four partition sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCounts {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

/// The dataset split into the four exposure-outcome sets:
///
/// * A: unexposed, no outcome (x = 0, y = 0)
/// * B: unexposed, outcome    (x = 0, y = 1)
/// * C: exposed, no outcome   (x = 1, y = 0)
/// * D: exposed, outcome      (x = 1, y = 1)
///
/// Matching pits every element of D against the pool A u B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionedSample {
    pub set_a: Vec<Unit>,
    pub set_b: Vec<Unit>,
    pub set_c: Vec<Unit>,
    pub set_d: Vec<Unit>,
}

impl PartitionedSample {
    pub fn counts(&self) -> SetCounts {
        SetCounts {
            a: self.set_a.len(),
            b: self.set_b.len(),
            c: self.set_c.len(),
            d: self.set_d.len(),
        }
    }

    /// Size of the unexposed arm (A u B).
    pub fn n_unexposed(&self) -> usize {
        self.set_a.len() + self.set_b.len()
    }

    /// Size of the exposed arm (C u D).
    pub fn n_exposed(&self) -> usize {
        self.set_c.len() + self.set_d.len()
    }

    pub fn total(&self) -> usize {
        self.n_unexposed() + self.n_exposed()
    }

    /// Whether the two arms have equal size. The matching estimator is
    /// derived for balanced arms; callers may still proceed on unbalanced
    /// data, and the estimate carries a flag saying so.
    pub fn arms_balanced(&self) -> bool {
        self.n_unexposed() == self.n_exposed()
    }

    /// All units, in set order A, B, C, D.
    pub fn units(&self) -> impl Iterator<Item = &Unit> {
        self.set_a
            .iter()
            .chain(self.set_b.iter())
            .chain(self.set_c.iter())
            .chain(self.set_d.iter())
    }
}

/// Splits a dataset into the four sets, validating unit invariants along the
/// way: ids must be unique, x and y binary, covariate vectors of one common
/// length, and all covariates finite.
pub fn partition_dataset(units: &[Unit]) -> Result<PartitionedSample> {
    if units.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let arity = units[0].covariates.len();
    let mut seen = HashSet::with_capacity(units.len());
    let mut p = PartitionedSample {
        set_a: Vec::new(),
        set_b: Vec::new(),
        set_c: Vec::new(),
        set_d: Vec::new(),
    };
    for u in units {
        if !seen.insert(u.id.as_str()) {
            return Err(Error::DuplicateId { id: u.id.clone() });
        }
        if u.x > 1 {
            return Err(Error::NonBinary {
                id: u.id.clone(),
                field: "x",
                value: u.x.to_string(),
            });
        }
        if u.y > 1 {
            return Err(Error::NonBinary {
                id: u.id.clone(),
                field: "y",
                value: u.y.to_string(),
            });
        }
        if u.covariates.len() != arity {
            return Err(Error::CovariateArity {
                id: u.id.clone(),
                expected: arity,
                got: u.covariates.len(),
            });
        }
        if let Some(i) = u.covariates.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCovariate {
                id: u.id.clone(),
                index: i,
            });
        }
        match (u.x, u.y) {
            (0, 0) => p.set_a.push(u.clone()),
            (0, 1) => p.set_b.push(u.clone()),
            (1, 0) => p.set_c.push(u.clone()),
            (1, 1) => p.set_d.push(u.clone()),
            _ => unreachable!("x and y validated binary above"),
        }
    }
    Ok(p)
}

/// Collapses a partition to its 2x2 table: D and C fill the exposed column,
/// B and A the unexposed one.
pub fn contingency_from_partition(p: &PartitionedSample, regime: Regime) -> ContingencyTable {
    ContingencyTable {
        n_xy: p.set_d.len() as u64,
        n_xy_not: p.set_c.len() as u64,
        n_x_not_y: p.set_b.len() as u64,
        n_x_not_y_not: p.set_a.len() as u64,
        regime,
    }
}

/// The probabilities read off a contingency table that the estimators need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondProbs {
    /// P(y | x): outcome rate among the exposed.
    pub p_y_given_x: f64,
    /// P(y | x'): outcome rate among the unexposed.
    pub p_y_given_x_not: f64,
    /// P(y): marginal outcome rate.
    pub p_y: f64,
    /// P(x, y): joint exposed-with-outcome mass.
    pub p_xy: f64,
    /// P(x', y'): joint unexposed-without-outcome mass.
    pub p_x_not_y_not: f64,
}

/// Computes the conditional and joint probabilities of a table. Errors if
/// either exposure column is empty, since the corresponding conditional is
/// then undefined.
pub fn conditional_probs(t: &ContingencyTable) -> Result<CondProbs> {
    let n1 = t.n_exposed();
    let n0 = t.n_unexposed();
    if n1 == 0 {
        return Err(Error::UndefinedConditional { column: "x = 1" });
    }
    if n0 == 0 {
        return Err(Error::UndefinedConditional { column: "x = 0" });
    }
    let total = t.total() as f64;
    Ok(CondProbs {
        p_y_given_x: t.n_xy as f64 / n1 as f64,
        p_y_given_x_not: t.n_x_not_y as f64 / n0 as f64,
        p_y: (t.n_xy + t.n_x_not_y) as f64 / total,
        p_xy: t.n_xy as f64 / total,
        p_x_not_y_not: t.n_x_not_y_not as f64 / total,
    })
}
