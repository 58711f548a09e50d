//! Groups, allocations and sampling from an allocation.
//!
//! An [`Allocation`] is a point on the group simplex describing the share of
//! a training set drawn from each group. [`PopulationSpec`] carries the
//! population prevalences that weight group risks into the population risk.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par::map_indexed;
use crate::rng::{stream_rng, StreamRng};

/// Tolerance on the simplex sum constraint.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Dense group index in `[0, |G|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(pub usize);

impl GroupId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for GroupId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_simplex(values: &[f64], what: &str, strictly_positive: bool) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(invalid(format!("{what} must have at least one group")));
    }
    for (g, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(invalid(format!("{what}[{g}] is not finite")));
        }
        if strictly_positive && v <= 0.0 {
            return Err(invalid(format!("{what}[{g}] = {v} must be > 0")));
        }
        if v < 0.0 {
            return Err(invalid(format!("{what}[{g}] = {v} is negative")));
        }
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(invalid(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(values.iter().map(|v| v / sum).collect())
}

/// Per-group training-set proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Allocation {
    weights: Vec<f64>,
}

impl Allocation {
    /// Validates and renormalizes `weights` onto the simplex.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Ok(Self {
            weights: check_simplex(&weights, "allocation", false)?,
        })
    }

    /// Rescales a non-negative vector with positive sum onto the simplex.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("allocation entries must be finite and non-negative"));
        }
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0) {
            return Err(invalid("allocation has zero total mass"));
        }
        Ok(Self {
            weights: raw.iter().map(|v| v / sum).collect(),
        })
    }

    pub fn uniform(groups: usize) -> Result<Self> {
        if groups == 0 {
            return Err(invalid("allocation must have at least one group"));
        }
        Ok(Self {
            weights: vec![1.0 / groups as f64; groups],
        })
    }

    /// Two-group allocation `(a, 1 - a)`.
    pub fn two_group(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(invalid(format!("two-group share {a} outside [0, 1]")));
        }
        Ok(Self {
            weights: vec![a, 1.0 - a],
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, g: GroupId) -> f64 {
        self.weights[g.0]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl TryFrom<Vec<f64>> for Allocation {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Allocation::new(v)
    }
}

impl From<Allocation> for Vec<f64> {
    fn from(a: Allocation) -> Self {
        a.weights
    }
}

/// Population prevalences of each group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PopulationSpec {
    gamma: Vec<f64>,
}

impl PopulationSpec {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        Ok(Self {
            gamma: check_simplex(&gamma, "gamma", true)?,
        })
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn groups(&self) -> usize {
        self.gamma.len()
    }

    /// The allocation that samples each group at its prevalence.
    pub fn as_allocation(&self) -> Allocation {
        Allocation {
            weights: self.gamma.clone(),
        }
    }
}

impl TryFrom<Vec<f64>> for PopulationSpec {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PopulationSpec::new(v)
    }
}

impl From<PopulationSpec> for Vec<f64> {
    fn from(p: PopulationSpec) -> Self {
        p.gamma
    }
}

/// Number of training instances from each group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupCounts {
    per_group: Vec<u64>,
}

impl GroupCounts {
    pub fn new(per_group: Vec<u64>) -> Self {
        Self { per_group }
    }

    pub fn per_group(&self) -> &[u64] {
        &self.per_group
    }

    pub fn get(&self, g: GroupId) -> u64 {
        self.per_group[g.0]
    }

    pub fn groups(&self) -> usize {
        self.per_group.len()
    }

    /// Total sample size `n`.
    pub fn total(&self) -> u64 {
        self.per_group.iter().sum()
    }

    /// Copy with group `g` removed from the training set.
    pub fn without(&self, g: GroupId) -> Self {
        let mut per_group = self.per_group.clone();
        per_group[g.0] = 0;
        Self { per_group }
    }
}

/// Floored per-group counts and the number of instances lost to flooring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlooredCounts {
    pub counts: GroupCounts,
    pub shortfall: u64,
}

/// Floor that treats values within rounding noise of an integer as that
/// integer, so `57/100 * 100` floors to 57.
pub(crate) fn floor_count(x: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// `alpha_g = n_g / n`.
pub fn allocation_from_counts(counts: &GroupCounts) -> Result<Allocation> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    Ok(Allocation {
        weights: counts
            .per_group
            .iter()
            .map(|&c| c as f64 / n as f64)
            .collect(),
    })
}

/// `n_g = floor(alpha_g * n)`; the shortfall `n - sum n_g` is at most `|G| - 1`.
pub fn counts_from_allocation(alpha: &Allocation, n: u64) -> FlooredCounts {
    let mut per_group: Vec<u64> = alpha
        .weights
        .iter()
        .map(|&a| floor_count(a * n as f64))
        .collect();
    // The tolerant floor can round up by a hair; never exceed n.
    let mut total: u64 = per_group.iter().sum();
    while total > n {
        let g = (0..per_group.len())
            .max_by_key(|&g| per_group[g])
            .unwrap_or(0);
        per_group[g] -= 1;
        total -= 1;
    }
    FlooredCounts {
        counts: GroupCounts { per_group },
        shortfall: n - total,
    }
}

/// One training instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub features: Vec<f64>,
    pub label: f64,
    pub group: GroupId,
}

/// A training set with group labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSample {
    records: Vec<Record>,
    groups: usize,
}

impl GroupedSample {
    pub fn new(records: Vec<Record>, groups: usize) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| r.group.0 >= groups) {
            return Err(invalid(format!(
                "record group {} out of range for {groups} groups",
                r.group
            )));
        }
        Ok(Self { records, groups })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn counts(&self) -> GroupCounts {
        let mut per_group = vec![0u64; self.groups];
        for r in &self.records {
            per_group[r.group.0] += 1;
        }
        GroupCounts { per_group }
    }
}

/// Draws i.i.d. `(features, label)` pairs for one group.
pub trait DataGenerator: Sync {
    fn draw(&self, rng: &mut StreamRng) -> std::result::Result<(Vec<f64>, f64), String>;
}

/// Samples `floor(alpha_g n)` records from each group's generator and
/// concatenates them in group order. Group `g` reads substream `g` of `seed`.
pub fn sample_from_allocation(
    generators: &[&dyn DataGenerator],
    alpha: &Allocation,
    n: u64,
    seed: u64,
) -> Result<GroupedSample> {
    let counts = counts_from_allocation(alpha, n).counts;
    sample_counts(generators, &counts, seed)
}

/// Samples exactly `counts` records per group.
pub fn sample_counts(
    generators: &[&dyn DataGenerator],
    counts: &GroupCounts,
    seed: u64,
) -> Result<GroupedSample> {
    let groups = counts.groups();
    for g in 0..groups {
        if counts.per_group[g] > 0 && g >= generators.len() {
            return Err(Error::Generator {
                group: g,
                message: "no generator for group".into(),
            });
        }
    }
    let per_group: Vec<Result<Vec<Record>>> = map_indexed(groups, |g| {
        let n_g = counts.per_group[g];
        let mut out = Vec::with_capacity(n_g as usize);
        if n_g == 0 {
            return Ok(out);
        }
        let mut rng = stream_rng(seed, g as u64);
        for _ in 0..n_g {
            let (features, label) = generators[g]
                .draw(&mut rng)
                .map_err(|message| Error::Generator { group: g, message })?;
            out.push(Record {
                features,
                label,
                group: GroupId(g),
            });
        }
        Ok(out)
    });
    let mut records = Vec::with_capacity(counts.total() as usize);
    for chunk in per_group {
        records.extend(chunk?);
    }
    Ok(GroupedSample { records, groups })
}
