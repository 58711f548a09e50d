//! End-to-end workflows over pluggable loss evaluators: the pilot-sample
//! recommendation loop, the allocation grid baseline, and the
//! leave-one-group-out interaction scan.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::allocation::{counts_from_allocation, sample_counts, Allocation, DataGenerator, GroupCounts, GroupId, PopulationSpec};
use crate::error::{invalid, Error, Result};
use crate::fit::{design_subset_grid, fit_group_scaling, FitOptions, LossObservation, Selection, SkipRule, DEFAULT_STARTS};
use crate::optimal::{minmax_allocation, ScalingModel};
use crate::par::{map_indexed, mean_and_variance};
use crate::rng::{derive_seed, normal, stream_rng};
use crate::synthetic::{ols_present_groups, LinearGenerator};

/// Trains on a training set with the given per-group counts and reports the
/// loss on each group.
pub trait LossEvaluator: Sync {
    fn n_groups(&self) -> usize;
    fn evaluate(&self, counts: &GroupCounts, seed: u64) -> std::result::Result<Vec<f64>, String>;
}

/// Losses read off a planted scaling model, plus Gaussian noise truncated at
/// 0. A group with no training samples is scored as if it had one, which
/// keeps the loss finite (`sigma2 + tau2 n^-q + delta`).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawEvaluator {
    pub model: ScalingModel,
    pub noise_sd: f64,
}

impl PowerLawEvaluator {
    pub fn new(model: ScalingModel, noise_sd: f64) -> Result<Self> {
        if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
            return Err(invalid("noise_sd must be finite and >= 0"));
        }
        Ok(Self { model, noise_sd })
    }
}

impl LossEvaluator for PowerLawEvaluator {
    fn n_groups(&self) -> usize {
        self.model.groups()
    }

    fn evaluate(&self, counts: &GroupCounts, seed: u64) -> std::result::Result<Vec<f64>, String> {
        if counts.groups() != self.model.groups() {
            return Err(format!("expected {} groups, got {}", self.model.groups(), counts.groups()));
        }
        let n = counts.total();
        if n == 0 {
            return Err("empty training set".into());
        }
        Ok((0..counts.groups())
            .map(|g| {
                let n_g = counts.per_group()[g].max(1) as f64;
                let clean = self.model.per_group[g].risk(n_g, n as f64);
                if self.noise_sd > 0.0 {
                    normal(&mut stream_rng(seed, g as u64), clean, self.noise_sd).max(0.0)
                } else {
                    clean
                }
            })
            .collect())
    }
}

/// One group of a linear model whose weights may differ between groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearShiftGroup {
    pub beta: Vec<f64>,
    pub intercept: f64,
}

/// Fits one pooled least-squares model with group intercepts on data whose
/// weights differ by group, and scores it on each group's own distribution
/// (identity feature covariance, exact expectation). An absent group is
/// predicted with the count-weighted mean of the fitted intercepts.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearShiftEvaluator {
    groups: Vec<LinearShiftGroup>,
    noise_sd: f64,
    chol: DMatrix<f64>,
}

impl LinearShiftEvaluator {
    pub fn new(groups: Vec<LinearShiftGroup>, noise_sd: f64) -> Result<Self> {
        if groups.is_empty() {
            return Err(invalid("at least one group required"));
        }
        let d = groups[0].beta.len();
        if groups.iter().any(|g| g.beta.len() != d) {
            return Err(invalid("all groups need the same feature dimension"));
        }
        if groups.iter().any(|g| !g.intercept.is_finite() || g.beta.iter().any(|b| !b.is_finite())) {
            return Err(invalid("weights and intercepts must be finite"));
        }
        if !(noise_sd > 0.0) || !noise_sd.is_finite() {
            return Err(invalid("noise_sd must be > 0"));
        }
        Ok(Self {
            groups,
            noise_sd,
            chol: DMatrix::identity(d, d),
        })
    }
}

impl LossEvaluator for LinearShiftEvaluator {
    fn n_groups(&self) -> usize {
        self.groups.len()
    }

    fn evaluate(&self, counts: &GroupCounts, seed: u64) -> std::result::Result<Vec<f64>, String> {
        if counts.groups() != self.groups.len() {
            return Err(format!("expected {} groups, got {}", self.groups.len(), counts.groups()));
        }
        let gens: Vec<LinearGenerator<'_>> = self
            .groups
            .iter()
            .map(|g| LinearGenerator {
                beta: &g.beta,
                intercept: g.intercept,
                noise_sd: self.noise_sd,
                chol: &self.chol,
            })
            .collect();
        let refs: Vec<&dyn DataGenerator> = gens.iter().map(|g| g as &dyn DataGenerator).collect();
        let sample = sample_counts(&refs, counts, seed).map_err(|e| e.to_string())?;
        let (beta, intercepts) = ols_present_groups(&sample).map_err(|e| e.to_string())?;
        let (mut num, mut den) = (0.0, 0.0);
        for (c, &n_g) in intercepts.iter().zip(counts.per_group()) {
            if let Some(c) = c {
                num += c * n_g as f64;
                den += n_g as f64;
            }
        }
        let fallback = num / den;
        Ok(self
            .groups
            .iter()
            .zip(&intercepts)
            .map(|(g, c)| {
                let db: f64 = beta.iter().zip(&g.beta).map(|(a, b)| (a - b) * (a - b)).sum();
                let dc = c.unwrap_or(fallback) - g.intercept;
                db + dc * dc + self.noise_sd * self.noise_sd
            })
            .collect())
    }
}

/// Serializable description of an evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluatorSpec {
    PowerLaw { model: ScalingModel, noise_sd: f64 },
    LinearShift { groups: Vec<LinearShiftGroup>, noise_sd: f64 },
}

impl EvaluatorSpec {
    pub fn build(&self) -> Result<Box<dyn LossEvaluator>> {
        Ok(match self {
            EvaluatorSpec::PowerLaw { model, noise_sd } => Box::new(PowerLawEvaluator::new(model.clone(), *noise_sd)?),
            EvaluatorSpec::LinearShift { groups, noise_sd } => {
                Box::new(LinearShiftEvaluator::new(groups.clone(), *noise_sd)?)
            }
        })
    }
}

/// Mean and standard error over trials; the standard error is `None` with
/// fewer than two values, and both are `None` with none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: Option<f64>,
    pub se: Option<f64>,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: None, se: None };
        }
        let (mean, var) = mean_and_variance(values);
        let se = (values.len() >= 2).then(|| (var / values.len() as f64).sqrt());
        Self { mean: Some(mean), se }
    }
}

/// Subsampling design applied to the pilot sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotDesign {
    pub ratios: Vec<f64>,
    pub fractions: Vec<f64>,
    #[serde(default)]
    pub skip_rules: Vec<SkipRule>,
    /// Evaluations per design point.
    pub replicates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// `alpha = gamma`.
    Gamma,
    /// `alpha = (1/2, 1/2)`.
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Baseline {
    Named(BaselineKind),
    Custom { name: String, alpha: Allocation },
}

impl Baseline {
    fn resolve(&self, gamma: &PopulationSpec) -> (String, Allocation) {
        match self {
            Baseline::Named(BaselineKind::Gamma) => ("gamma".into(), gamma.as_allocation()),
            Baseline::Named(BaselineKind::Equal) => ("equal".into(), Allocation::two_group(0.5).expect("valid")),
            Baseline::Custom { name, alpha } => (name.clone(), alpha.clone()),
        }
    }
}

fn default_baselines() -> Vec<Baseline> {
    vec![Baseline::Named(BaselineKind::Gamma), Baseline::Named(BaselineKind::Equal)]
}

fn default_starts() -> usize {
    DEFAULT_STARTS
}

/// Name of the fitted minmax strategy in reports.
pub const ALPHA_HAT: &str = "alpha_hat";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotConfig {
    pub gamma: PopulationSpec,
    pub pilot_counts: GroupCounts,
    pub design: PilotDesign,
    pub n_new_multipliers: Vec<f64>,
    #[serde(default = "default_baselines")]
    pub baselines: Vec<Baseline>,
    pub trials: usize,
    pub m_min: u64,
    #[serde(default = "default_starts")]
    pub fit_starts: usize,
    #[serde(default)]
    pub selection: Selection,
    /// Also run the allocation grid at this resolution for each multiplier.
    #[serde(default)]
    pub grid_resolution: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl PilotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma.groups() != 2 || self.pilot_counts.groups() != 2 {
            return Err(invalid("the pilot workflow needs exactly two groups"));
        }
        if self.n_new_multipliers.is_empty() || self.n_new_multipliers.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(invalid("multipliers must be non-empty and > 0"));
        }
        if self.trials < 1 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.design.replicates < 1 {
            return Err(invalid("design replicates must be >= 1"));
        }
        if self.fit_starts < 1 {
            return Err(invalid("fit_starts must be >= 1"));
        }
        for b in &self.baselines {
            if let Baseline::Custom { alpha, .. } = b {
                if alpha.len() != 2 {
                    return Err(invalid("custom baselines need two groups"));
                }
            }
        }
        if let Some(r) = self.grid_resolution {
            check_resolution(r)?;
        }
        for m in &self.n_new_multipliers {
            if self.n_new(*m) < 2 {
                return Err(invalid(format!("multiplier {m} gives fewer than 2 new samples")));
            }
        }
        Ok(())
    }

    fn n_new(&self, multiplier: f64) -> u64 {
        (multiplier * self.pilot_counts.total() as f64).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub name: String,
    pub max_group_loss: MeanSe,
    pub population_loss: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub alpha_grid_star: f64,
    pub max_group_loss: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierSummary {
    pub multiplier: f64,
    pub n_new: u64,
    pub strategies: Vec<StrategySummary>,
    /// `(min, max)` of the recommended share of group A over trials.
    pub recommended_alpha_range: Option<(f64, f64)>,
    /// Recommended share of group A in each successful trial.
    pub alpha_hat: Vec<f64>,
    /// Trials whose recommendation sat at `1/n_new` or `1 - 1/n_new`.
    pub clipped_trials: usize,
    pub grid: Option<GridSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PilotReport {
    pub trials: usize,
    pub failed_trials: usize,
    pub failures: Vec<TrialFailure>,
    pub multipliers: Vec<MultiplierSummary>,
}

struct StrategyOutcome {
    max_loss: f64,
    population_loss: f64,
}

struct TrialOutcome {
    /// Per multiplier: recommended share, clipped flag, per-strategy losses.
    per_multiplier: Vec<(f64, bool, Vec<StrategyOutcome>)>,
}

const FIT_TAG: u64 = 1 << 40;
const EVAL_TAG: u64 = 1 << 41;

/// Runs the pilot workflow: per trial, evaluate the subsampling design on
/// the pilot, fit a scaling curve per group, recommend the minmax allocation
/// for each new sample size, and score it against the baselines on fresh
/// evaluations. Trial `t` uses seed `derive_seed(config.seed, t)`; a trial
/// whose fit fails is excluded and reported.
pub fn run_pilot_workflow(config: &PilotConfig, evaluator: &dyn LossEvaluator) -> Result<PilotReport> {
    config.validate()?;
    if evaluator.n_groups() != 2 {
        return Err(invalid("the pilot workflow needs a two-group evaluator"));
    }
    let design = design_subset_grid(
        config.pilot_counts.per_group(),
        &config.design.ratios,
        &config.design.fractions,
        &config.design.skip_rules,
    )?;
    let strategies: Vec<(String, Option<Allocation>)> = std::iter::once((ALPHA_HAT.to_string(), None))
        .chain(config.baselines.iter().map(|b| {
            let (name, alpha) = b.resolve(&config.gamma);
            (name, Some(alpha))
        }))
        .collect();

    let outcomes: Vec<std::result::Result<TrialOutcome, String>> =
        map_indexed(config.trials, |t| run_trial(config, &design, &strategies, evaluator, t));

    let mut failures = Vec::new();
    let mut ok = Vec::new();
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => ok.push(o),
            Err(message) => failures.push(TrialFailure { trial: t, message }),
        }
    }

    let mut multipliers = Vec::new();
    for (k, &m) in config.n_new_multipliers.iter().enumerate() {
        let n_new = config.n_new(m);
        let alpha_hat: Vec<f64> = ok.iter().map(|o| o.per_multiplier[k].0).collect();
        let clipped_trials = ok.iter().filter(|o| o.per_multiplier[k].1).count();
        let summaries = strategies
            .iter()
            .enumerate()
            .map(|(s, (name, _))| {
                let max: Vec<f64> = ok.iter().map(|o| o.per_multiplier[k].2[s].max_loss).collect();
                let pop: Vec<f64> = ok.iter().map(|o| o.per_multiplier[k].2[s].population_loss).collect();
                StrategySummary {
                    name: name.clone(),
                    max_group_loss: MeanSe::of(&max),
                    population_loss: MeanSe::of(&pop),
                }
            })
            .collect();
        let range = alpha_hat.iter().cloned().fold(None, |acc: Option<(f64, f64)>, a| {
            Some(acc.map_or((a, a), |(lo, hi)| (lo.min(a), hi.max(a))))
        });
        let grid = match config.grid_resolution {
            Some(res) => {
                let g = grid_baseline(evaluator, n_new, res, config.trials, derive_seed(config.seed, EVAL_TAG + k as u64))?;
                let star = g.curve.iter().find(|p| p.alpha == g.alpha_grid_star).expect("star on curve");
                Some(GridSummary {
                    alpha_grid_star: g.alpha_grid_star,
                    max_group_loss: MeanSe {
                        mean: star.mean_max_loss,
                        se: star.se,
                    },
                })
            }
            None => None,
        };
        multipliers.push(MultiplierSummary {
            multiplier: m,
            n_new,
            strategies: summaries,
            recommended_alpha_range: range,
            alpha_hat,
            clipped_trials,
            grid,
        });
    }
    Ok(PilotReport {
        trials: config.trials,
        failed_trials: failures.len(),
        failures,
        multipliers,
    })
}

fn run_trial(
    config: &PilotConfig,
    design: &[GroupCounts],
    strategies: &[(String, Option<Allocation>)],
    evaluator: &dyn LossEvaluator,
    t: usize,
) -> std::result::Result<TrialOutcome, String> {
    let ts = derive_seed(config.seed, t as u64);
    let reps = config.design.replicates;
    let mut obs = Vec::with_capacity(design.len() * reps * 2);
    for (i, counts) in design.iter().enumerate() {
        for r in 0..reps {
            let losses = evaluator.evaluate(counts, derive_seed(ts, (i * reps + r) as u64))?;
            for (g, (&n_g, &loss)) in counts.per_group().iter().zip(&losses).enumerate() {
                if n_g >= 1 {
                    let o = LossObservation::new(GroupId(g), n_g, counts.total(), loss, Some(r as u64))
                        .map_err(|e| format!("evaluator returned an invalid loss: {e}"))?;
                    obs.push(o);
                }
            }
        }
    }
    let opts = FitOptions {
        m_min: config.m_min,
        starts: config.fit_starts,
        seed: derive_seed(ts, FIT_TAG),
        selection: config.selection,
    };
    let mut fitted = Vec::with_capacity(2);
    for g in 0..2 {
        let fit = fit_group_scaling(&obs, GroupId(g), opts).map_err(|e| format!("fit for group {g} failed: {e}"))?;
        fitted.push(fit.params);
    }
    let model = ScalingModel::new(fitted).map_err(|e| e.to_string())?;
    let mut per_multiplier = Vec::with_capacity(config.n_new_multipliers.len());
    for (k, &m) in config.n_new_multipliers.iter().enumerate() {
        let n_new = config.n_new(m);
        let rec = minmax_allocation(&model, n_new as f64).map_err(|e| e.to_string())?;
        let a = rec.alpha.weights()[0];
        let edge = 1.0 / n_new as f64;
        let clipped = a <= edge * (1.0 + 1e-12) || a >= 1.0 - edge * (1.0 + 1e-12);
        let eval_seed = derive_seed(ts, EVAL_TAG + k as u64);
        let mut results = Vec::with_capacity(strategies.len());
        for (_, alpha) in strategies {
            let alpha = alpha.as_ref().unwrap_or(&rec.alpha);
            let counts = counts_from_allocation(alpha, n_new).counts;
            let losses = evaluator.evaluate(&counts, eval_seed)?;
            results.push(StrategyOutcome {
                max_loss: losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                population_loss: config.gamma.gamma().iter().zip(&losses).map(|(g, l)| g * l).sum(),
            });
        }
        per_multiplier.push((a, clipped, results));
    }
    Ok(TrialOutcome { per_multiplier })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    /// Share of group A.
    pub alpha: f64,
    /// Mean over trials of the largest group loss; `None` when a group would
    /// receive no samples.
    pub mean_max_loss: Option<f64>,
    pub se: Option<f64>,
    pub unsampled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridBaseline {
    pub alpha_grid_star: f64,
    pub curve: Vec<GridPoint>,
}

fn check_resolution(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(invalid(format!("resolution {r} outside (0, 0.5]")));
    }
    Ok(())
}

/// Shares `0, r, 2r, ..` up to 1, always ending at 1.
pub fn allocation_grid(resolution: f64) -> Result<Vec<f64>> {
    check_resolution(resolution)?;
    let steps = (1.0 / resolution + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|k| (k as f64 * resolution).min(1.0)).collect();
    if (1.0 - grid[steps]).abs() > 1e-9 {
        grid.push(1.0);
    } else {
        grid[steps] = 1.0;
    }
    Ok(grid)
}

/// Evaluates every two-group allocation on a grid and returns the share of
/// group A with the smallest mean maximum group loss. Allocations leaving a
/// group without samples are reported as unsampled and not evaluated. Every
/// grid point in trial `t` uses the same seed, `derive_seed(seed, t)`.
pub fn grid_baseline(
    evaluator: &dyn LossEvaluator,
    n_new: u64,
    resolution: f64,
    trials: usize,
    seed: u64,
) -> Result<GridBaseline> {
    let grid = allocation_grid(resolution)?;
    if trials < 1 {
        return Err(invalid("trials must be >= 1"));
    }
    if evaluator.n_groups() != 2 {
        return Err(invalid("the grid baseline needs a two-group evaluator"));
    }
    let counts: Vec<GroupCounts> = grid
        .iter()
        .map(|&a| counts_from_allocation(&Allocation::two_group(a).expect("grid share in [0, 1]"), n_new).counts)
        .collect();
    let losses: Vec<Result<Option<f64>>> = map_indexed(grid.len() * trials, |i| {
        let (p, t) = (i / trials, i % trials);
        let c = &counts[p];
        if c.per_group().contains(&0) {
            return Ok(None);
        }
        evaluator
            .evaluate(c, derive_seed(seed, t as u64))
            .map(|l| Some(l.iter().cloned().fold(f64::NEG_INFINITY, f64::max)))
            .map_err(|message| Error::Evaluator {
                subset: format!("alpha_A = {}", grid[p]),
                message,
            })
    });
    let mut curve = Vec::with_capacity(grid.len());
    let mut it = losses.into_iter();
    for &alpha in &grid {
        let vals: Vec<Option<f64>> = it.by_ref().take(trials).collect::<Result<_>>()?;
        let vals: Option<Vec<f64>> = vals.into_iter().collect();
        curve.push(match vals {
            Some(v) => {
                let s = MeanSe::of(&v);
                GridPoint {
                    alpha,
                    mean_max_loss: s.mean,
                    se: s.se,
                    unsampled: false,
                }
            }
            None => GridPoint {
                alpha,
                mean_max_loss: None,
                se: None,
                unsampled: true,
            },
        });
    }
    let star = curve
        .iter()
        .filter_map(|p| p.mean_max_loss.map(|m| (p.alpha, m)))
        .fold(None, |best: Option<(f64, f64)>, (a, m)| match best {
            Some((_, bm)) if bm <= m => best,
            _ => Some((a, m)),
        })
        .ok_or_else(|| invalid("every grid allocation leaves a group without samples"))?;
    Ok(GridBaseline {
        alpha_grid_star: star.0,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogoMatrix {
    pub groups: usize,
    pub trials: usize,
    /// Row `i` withholds group `i`; column `j` is the evaluation group.
    /// Entries are `100 (L_all - L_without_i) / L_all` on group `j`,
    /// averaged over trials.
    pub percent_change: Vec<Vec<f64>>,
    pub standard_error: Vec<Vec<Option<f64>>>,
}

/// Retrains without each group in turn and reports the percent change in
/// each group's loss. Trial `t` evaluates the full training set with
/// `derive_seed(s_t, 0)` and the set without group `i` with
/// `derive_seed(s_t, i + 1)`, where `s_t = derive_seed(seed, t)`.
pub fn leave_one_group_out(
    evaluator: &dyn LossEvaluator,
    counts: &GroupCounts,
    trials: usize,
    seed: u64,
) -> Result<LogoMatrix> {
    let k = counts.groups();
    if k < 2 {
        return Err(invalid("leave-one-group-out needs at least two groups"));
    }
    if evaluator.n_groups() != k {
        return Err(invalid(format!("evaluator has {} groups, counts have {k}", evaluator.n_groups())));
    }
    if counts.per_group().contains(&0) {
        return Err(invalid("every group needs training samples in the full set"));
    }
    if trials < 1 {
        return Err(invalid("trials must be >= 1"));
    }
    let per_trial: Vec<Result<Vec<Vec<f64>>>> = map_indexed(trials, |t| {
        let st = derive_seed(seed, t as u64);
        let all = evaluator.evaluate(counts, derive_seed(st, 0)).map_err(|message| Error::Evaluator {
            subset: "all groups".into(),
            message,
        })?;
        if let Some(j) = all.iter().position(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::Evaluator {
                subset: "all groups".into(),
                message: format!("loss on group {j} is {}, need a positive baseline", all[j]),
            });
        }
        (0..k)
            .map(|i| {
                let without = evaluator
                    .evaluate(&counts.without(GroupId(i)), derive_seed(st, i as u64 + 1))
                    .map_err(|message| Error::Evaluator {
                        subset: format!("without group {i}"),
                        message,
                    })?;
                Ok(all.iter().zip(&without).map(|(a, w)| 100.0 * (a - w) / a).collect())
            })
            .collect()
    });
    let per_trial: Vec<Vec<Vec<f64>>> = per_trial.into_iter().collect::<Result<_>>()?;
    let mut percent_change = vec![vec![0.0; k]; k];
    let mut standard_error = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..k {
            let vals: Vec<f64> = per_trial.iter().map(|m| m[i][j]).collect();
            let s = MeanSe::of(&vals);
            percent_change[i][j] = s.mean.expect("trials >= 1");
            standard_error[i][j] = s.se;
        }
    }
    Ok(LogoMatrix {
        groups: k,
        trials,
        percent_change,
        standard_error,
    })
}
