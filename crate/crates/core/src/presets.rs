//! Named scenarios shipped as JSON under `presets/`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::allocation::GroupCounts;
use crate::error::{invalid, Result};
use crate::fit::{design_subset_grid, SkipRule};
use crate::harness::{EvaluatorSpec, LossEvaluator, PilotConfig};

const PILOT: &[(&str, &str)] = &[
    ("goodreads-pilot", include_str!("../presets/goodreads-pilot.json")),
    ("synthetic-asymmetric", include_str!("../presets/synthetic-asymmetric.json")),
    ("synthetic-symmetric", include_str!("../presets/synthetic-symmetric.json")),
];

const LOGO: &[(&str, &str)] = &[
    ("logo-tau-free", include_str!("../presets/logo-tau-free.json")),
    ("logo-shift", include_str!("../presets/logo-shift.json")),
];

const DESIGN: &[(&str, &str)] = &[
    ("b5-design", include_str!("../presets/b5-design.json")),
    ("b6-design", include_str!("../presets/b6-design.json")),
];

/// A pilot workflow together with the evaluator it runs against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotScenario {
    pub evaluator: EvaluatorSpec,
    pub config: PilotConfig,
}

/// A leave-one-group-out scan over labelled groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogoScenario {
    pub groups: Vec<String>,
    pub counts: BTreeMap<String, u64>,
    pub evaluator: EvaluatorSpec,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl LogoScenario {
    /// Training counts in `groups` order, checking labels both ways.
    pub fn counts(&self) -> Result<GroupCounts> {
        for label in self.counts.keys() {
            if !self.groups.contains(label) {
                return Err(invalid(format!("unknown group label '{label}' in counts")));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut per_group = Vec::with_capacity(self.groups.len());
        for label in &self.groups {
            if !seen.insert(label) {
                return Err(invalid(format!("duplicate group label '{label}'")));
            }
            let n = self
                .counts
                .get(label)
                .ok_or_else(|| invalid(format!("no count for group '{label}'")))?;
            per_group.push(*n);
        }
        Ok(GroupCounts::new(per_group))
    }

    pub fn evaluator(&self) -> Result<Box<dyn LossEvaluator>> {
        let ev = self.evaluator.build()?;
        if ev.n_groups() != self.groups.len() {
            return Err(invalid(format!(
                "evaluator has {} groups but {} labels are listed",
                ev.n_groups(),
                self.groups.len()
            )));
        }
        Ok(ev)
    }
}

/// A two-group subsampling design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetDesign {
    pub n_max: Vec<u64>,
    pub ratios: Vec<f64>,
    pub fractions: Vec<f64>,
    #[serde(default)]
    pub skip_rules: Vec<SkipRule>,
}

impl SubsetDesign {
    pub fn counts(&self) -> Result<Vec<GroupCounts>> {
        design_subset_grid(&self.n_max, &self.ratios, &self.fractions, &self.skip_rules)
    }
}

fn lookup<'a>(table: &[(&str, &'a str)], kind: &str, name: &str) -> Result<&'a str> {
    table.iter().find(|(n, _)| *n == name).map(|(_, s)| *s).ok_or_else(|| {
        let known: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
        invalid(format!("unknown {kind} preset '{name}' (known: {})", known.join(", ")))
    })
}

fn parse<T: for<'de> Deserialize<'de>>(name: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| invalid(format!("preset '{name}' is malformed: {e}")))
}

/// Raw JSON of a pilot preset, for callers that merge overrides into it.
pub fn pilot_value(name: &str) -> Result<Value> {
    parse(name, lookup(PILOT, "pilot", name)?)
}

pub fn pilot(name: &str) -> Result<PilotScenario> {
    parse(name, lookup(PILOT, "pilot", name)?)
}

pub fn logo_value(name: &str) -> Result<Value> {
    parse(name, lookup(LOGO, "logo", name)?)
}

pub fn logo(name: &str) -> Result<LogoScenario> {
    parse(name, lookup(LOGO, "logo", name)?)
}

pub fn design(name: &str) -> Result<SubsetDesign> {
    parse(name, lookup(DESIGN, "design", name)?)
}

pub fn pilot_names() -> Vec<&'static str> {
    PILOT.iter().map(|(n, _)| *n).collect()
}

pub fn logo_names() -> Vec<&'static str> {
    LOGO.iter().map(|(n, _)| *n).collect()
}

pub fn design_names() -> Vec<&'static str> {
    DESIGN.iter().map(|(n, _)| *n).collect()
}
