//! Per-group least-squares fits of the scaling curve
//!
//! ```text
//! loss ≈ sigma2 * n_g^-p + tau2 * n^-q + delta
//! ```
//!
//! with `sigma2, tau2, delta >= 0` and `p, q` in `[0, 2]`. The box is enforced
//! by fitting `sigma2 = e^a`, `tau2 = e^b`, `delta = e^c` and
//! `p = 2 * logistic(u)`, `q = 2 * logistic(v)`, so the solver works on an
//! unconstrained problem. Several starts are run and the lowest SSE wins.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{floor_count, GroupCounts, GroupId};
use crate::error::{invalid, Error, Result};
use crate::lm::{minimize, LmOptions};
use crate::optimal::{GroupScaling, MAX_EXPONENT};
use crate::par::map_indexed;
use crate::rng::{derive_seed, stream_rng};

pub const DEFAULT_STARTS: usize = 16;
const N_PARAMS: usize = 5;
const LOG_FLOOR: f64 = -200.0;
const LOG_CEIL: f64 = 200.0;

/// One measured loss at a training-set composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossObservation {
    pub group: GroupId,
    pub n_g: u64,
    pub n: u64,
    pub loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_tag: Option<u64>,
}

impl LossObservation {
    pub fn new(group: GroupId, n_g: u64, n: u64, loss: f64, seed_tag: Option<u64>) -> Result<Self> {
        let o = Self {
            group,
            n_g,
            n,
            loss,
            seed_tag,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_g < 1 || self.n < self.n_g {
            return Err(invalid(format!("need n >= n_g >= 1, got n_g = {}, n = {}", self.n_g, self.n)));
        }
        if !self.loss.is_finite() || self.loss < 0.0 {
            return Err(invalid(format!("loss = {} must be finite and >= 0", self.loss)));
        }
        Ok(())
    }
}

/// Standard errors of the natural parameters. `None` marks a parameter the
/// data do not identify.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamStderr {
    pub sigma2: Option<f64>,
    pub p: Option<f64>,
    pub tau2: Option<f64>,
    pub q: Option<f64>,
    pub delta: Option<f64>,
}

impl ParamStderr {
    fn from_array(a: [Option<f64>; N_PARAMS]) -> Self {
        Self {
            sigma2: a[0],
            p: a[1],
            tau2: a[2],
            q: a[3],
            delta: a[4],
        }
    }

    pub fn named(&self) -> [(&'static str, Option<f64>); N_PARAMS] {
        [
            ("sigma2", self.sigma2),
            ("p", self.p),
            ("tau2", self.tau2),
            ("q", self.q),
            ("delta", self.delta),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub group: GroupId,
    pub params: GroupScaling,
    /// Terms of the selected model; excluded terms have zero scale.
    pub terms: Terms,
    pub residual_sse: f64,
    pub stderr: ParamStderr,
    pub n_observations_used: usize,
    pub excluded_below_mg: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub m_min: u64,
    pub starts: usize,
    pub seed: u64,
    pub selection: Selection,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            m_min: 1,
            starts: DEFAULT_STARTS,
            seed: 0,
            selection: Selection::default(),
        }
    }
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

struct Point {
    ln_ng: f64,
    ln_n: f64,
    loss: f64,
}

/// Which power-law terms a candidate model includes. `delta` is always fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terms {
    pub group: bool,
    pub pooled: bool,
}

impl Terms {
    pub const FULL: Terms = Terms {
        group: true,
        pooled: true,
    };
    const NESTED: [Terms; 3] = [
        Terms::FULL,
        Terms {
            group: true,
            pooled: false,
        },
        Terms {
            group: false,
            pooled: true,
        },
    ];

    fn free_params(self) -> usize {
        1 + 2 * self.group as usize + 2 * self.pooled as usize
    }
}

/// How the reported model is chosen among fitted candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Lowest SSE over the full model (and the constant fit).
    LeastSquares,
    /// Lowest BIC over the full model, the models without the group or pooled
    /// term, and the constant fit.
    #[default]
    Bic,
}

fn decode(x: &DVector<f64>, terms: Terms) -> [f64; N_PARAMS] {
    let on = |flag: bool, v: f64| if flag { v } else { 0.0 };
    [
        on(terms.group, x[0].clamp(LOG_FLOOR, LOG_CEIL).exp()),
        if terms.group { MAX_EXPONENT * logistic(x[1]) } else { 1.0 },
        on(terms.pooled, x[2].clamp(LOG_FLOOR, LOG_CEIL).exp()),
        if terms.pooled { MAX_EXPONENT * logistic(x[3]) } else { 1.0 },
        x[4].clamp(LOG_FLOOR, LOG_CEIL).exp(),
    ]
}

fn residuals_and_jacobian(points: &[Point], x: &DVector<f64>, terms: Terms) -> (DVector<f64>, DMatrix<f64>) {
    let [s2, p, t2, q, d] = decode(x, terms);
    let dp = MAX_EXPONENT * logistic(x[1]) * (1.0 - logistic(x[1]));
    let dq = MAX_EXPONENT * logistic(x[3]) * (1.0 - logistic(x[3]));
    let m = points.len();
    let mut r = DVector::zeros(m);
    let mut j = DMatrix::zeros(m, N_PARAMS);
    for (i, pt) in points.iter().enumerate() {
        let a = s2 * (-p * pt.ln_ng).exp();
        let b = t2 * (-q * pt.ln_n).exp();
        r[i] = a + b + d - pt.loss;
        j[(i, 0)] = a;
        j[(i, 1)] = -a * pt.ln_ng * dp;
        j[(i, 2)] = b;
        j[(i, 3)] = -b * pt.ln_n * dq;
        j[(i, 4)] = d;
    }
    (r, j)
}

fn sse_of(points: &[Point], s: &GroupScaling) -> f64 {
    points
        .iter()
        .map(|pt| {
            let r = s.risk(pt.ln_ng.exp(), pt.ln_n.exp()) - pt.loss;
            r * r
        })
        .sum()
}

/// Fits the scaling curve for `group` from observations with `n_g >= m_min`.
pub fn fit_group_scaling(observations: &[LossObservation], group: GroupId, opts: FitOptions) -> Result<FitResult> {
    if opts.starts == 0 {
        return Err(invalid("starts must be >= 1"));
    }
    if opts.m_min == 0 {
        return Err(invalid("m_min must be >= 1"));
    }
    for o in observations {
        o.validate()?;
    }
    let of_group: Vec<&LossObservation> = observations.iter().filter(|o| o.group == group).collect();
    let used: Vec<&LossObservation> = of_group.iter().copied().filter(|o| o.n_g >= opts.m_min).collect();
    let excluded = of_group.len() - used.len();
    if used.len() < N_PARAMS + 1 {
        return Err(Error::InsufficientData(format!(
            "group {group} has {} observations with n_g >= {}, need at least {}",
            used.len(),
            opts.m_min,
            N_PARAMS + 1
        )));
    }
    let distinct_ng: BTreeSet<u64> = used.iter().map(|o| o.n_g).collect();
    if distinct_ng.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "group {group} needs at least two distinct n_g values"
        )));
    }
    let distinct_n: BTreeSet<u64> = used.iter().map(|o| o.n).collect();
    if distinct_n.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "group {group} needs at least two distinct n values"
        )));
    }

    let points: Vec<Point> = used
        .iter()
        .map(|o| Point {
            ln_ng: (o.n_g as f64).ln(),
            ln_n: (o.n as f64).ln(),
            loss: o.loss,
        })
        .collect();
    let y_max = points.iter().map(|p| p.loss).fold(0.0, f64::max).max(1e-12);
    let y_min = points.iter().map(|p| p.loss).fold(f64::INFINITY, f64::min).max(1e-12 * y_max);
    let mean_loss = points.iter().map(|p| p.loss).sum::<f64>() / points.len() as f64;

    let seed = derive_seed(opts.seed, group.0 as u64);
    let candidates: &[Terms] = match opts.selection {
        Selection::LeastSquares => &Terms::NESTED[..1],
        Selection::Bic => &Terms::NESTED,
    };
    let outcomes = map_indexed(candidates.len() * opts.starts, |i| {
        let terms = candidates[i / opts.starts];
        let k = i % opts.starts;
        let x0 = initial_point(k, seed, y_min, y_max);
        let out = minimize(x0, |x| residuals_and_jacobian(&points, x, terms), LmOptions::default());
        let [s2, p, t2, q, d] = decode(&out.x, terms);
        let params = GroupScaling::new(s2, p, t2, q, d, opts.m_min).expect("decoded parameters lie in the box");
        (sse_of(&points, &params), params, terms)
    });

    let constant = GroupScaling::new(0.0, 1.0, 0.0, 1.0, mean_loss, opts.m_min)?;
    let no_terms = Terms {
        group: false,
        pooled: false,
    };
    let m = points.len() as f64;
    let score = |sse: f64, terms: Terms| match opts.selection {
        Selection::LeastSquares => sse,
        Selection::Bic => m * (sse / m).max(f64::MIN_POSITIVE).ln() + terms.free_params() as f64 * m.ln(),
    };
    let constant_sse = sse_of(&points, &constant);
    let mut best = (score(constant_sse, no_terms), constant_sse, constant, no_terms);
    let mut ordered = outcomes;
    ordered.sort_by_key(|o| o.2.free_params());
    for (sse, params, terms) in ordered {
        let sc = score(sse, terms);
        if sc < best.0 {
            best = (sc, sse, params, terms);
        }
    }
    let (_, residual_sse, params, terms) = best;
    Ok(FitResult {
        group,
        terms,
        stderr: standard_errors(&points, &params, terms, residual_sse),
        params,
        residual_sse,
        n_observations_used: used.len(),
        excluded_below_mg: excluded,
    })
}

/// Fits every group present in `observations`, in increasing group order.
pub fn fit_all_groups(observations: &[LossObservation], opts: FitOptions) -> Result<Vec<FitResult>> {
    let groups: BTreeSet<GroupId> = observations.iter().map(|o| o.group).collect();
    if groups.is_empty() {
        return Err(Error::InsufficientData("no observations".into()));
    }
    groups
        .into_iter()
        .map(|g| fit_group_scaling(observations, g, opts))
        .collect()
}

fn initial_point(k: usize, seed: u64, y_min: f64, y_max: f64) -> DVector<f64> {
    if k == 0 {
        return DVector::from_vec(vec![
            (y_max * 10.0).ln(),
            logit(0.25),
            (y_max).ln(),
            logit(0.25),
            (0.5 * y_min).ln(),
        ]);
    }
    let mut rng = stream_rng(seed, k as u64);
    let log_uniform = |rng: &mut crate::rng::StreamRng, lo: f64, hi: f64| rng.random_range(lo.ln()..hi.ln());
    let a = log_uniform(&mut rng, 1e-2 * y_max, 1e3 * y_max);
    let u = logit(rng.random_range(0.02..0.98));
    let b = log_uniform(&mut rng, 1e-4 * y_max, 1e3 * y_max);
    let v = logit(rng.random_range(0.02..0.98));
    let c = log_uniform(&mut rng, 1e-4 * y_min, y_min);
    DVector::from_vec(vec![a, u, b, v, c])
}

/// Gauss–Newton standard errors `s^2 (J^T J)^-1` in the natural parameters
/// of the terms present in the model.
fn standard_errors(points: &[Point], s: &GroupScaling, terms: Terms, sse: f64) -> ParamStderr {
    let active: Vec<usize> = (0..N_PARAMS)
        .filter(|&i| match i {
            0 | 1 => terms.group,
            2 | 3 => terms.pooled,
            _ => true,
        })
        .collect();
    let m = points.len();
    let k = active.len();
    let s2_hat = sse / m.saturating_sub(k).max(1) as f64;
    let mut j = DMatrix::zeros(m, k);
    for (i, pt) in points.iter().enumerate() {
        let a = (-s.p * pt.ln_ng).exp();
        let b = (-s.q * pt.ln_n).exp();
        let full = [a, -s.sigma2 * a * pt.ln_ng, b, -s.tau2 * b * pt.ln_n, 1.0];
        for (c, &idx) in active.iter().enumerate() {
            j[(i, c)] = full[idx];
        }
    }
    let svd = (j.transpose() * &j).svd(false, true);
    let mut out = [None; N_PARAMS];
    let Some(v_t) = svd.v_t.as_ref() else {
        return ParamStderr::from_array(out);
    };
    let sv = &svd.singular_values;
    let cutoff = sv.iter().cloned().fold(0.0, f64::max) * 1e-14 * k as f64;
    for (c, &idx) in active.iter().enumerate() {
        let mut var = 0.0;
        let mut identified = true;
        for r in 0..k {
            let v = v_t[(r, c)];
            if sv[r] > cutoff {
                var += v * v / sv[r];
            } else if v.abs() > 1e-6 {
                identified = false;
            }
        }
        let se = (s2_hat * var).sqrt();
        if identified && se.is_finite() {
            out[idx] = Some(se);
        }
    }
    ParamStderr::from_array(out)
}

/// Drops design points whose fraction matches `fractions` when the
/// allocation ratio is below `ratio_below`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkipRule {
    pub fractions: Vec<f64>,
    pub ratio_below: f64,
}

impl SkipRule {
    fn skips(&self, ratio: f64, fraction: f64) -> bool {
        ratio < self.ratio_below && self.fractions.iter().any(|f| (f - fraction).abs() <= 1e-12)
    }
}

/// Two-group subsampling design. For each `(ratio, fraction)` the larger
/// group gets `fraction * n_max` and the smaller `ratio * fraction * n_max`
/// (where `n_max` is the larger group's pool, and the smaller group is capped
/// at its own pool). Both role assignments are emitted, duplicates and pairs
/// with an empty group are dropped, and first-occurrence order is kept.
pub fn design_subset_grid(
    n_max_per_group: &[u64],
    ratios: &[f64],
    fractions: &[f64],
    skip_rules: &[SkipRule],
) -> Result<Vec<GroupCounts>> {
    if n_max_per_group.len() != 2 {
        return Err(invalid("the subset design needs exactly two groups"));
    }
    if ratios.is_empty() || fractions.is_empty() {
        return Err(invalid("ratios and fractions must be non-empty"));
    }
    for &v in ratios.iter().chain(fractions) {
        if !(v > 0.0 && v <= 1.0) {
            return Err(invalid(format!("ratio or fraction {v} outside (0, 1]")));
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &r in ratios {
        for &x in fractions {
            if skip_rules.iter().any(|s| s.skips(r, x)) {
                continue;
            }
            for major in [0usize, 1] {
                let minor = 1 - major;
                let pool = n_max_per_group[major] as f64;
                let mut pair = [0u64; 2];
                pair[major] = floor_count(x * pool);
                pair[minor] = floor_count(x * r * pool).min(n_max_per_group[minor]);
                if pair.contains(&0) {
                    continue;
                }
                if seen.insert(pair) {
                    out.push(GroupCounts::new(pair.to_vec()));
                }
            }
        }
    }
    if out.is_empty() {
        return Err(invalid("design is empty after skip rules"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservationResidual {
    pub n_g: u64,
    pub n: u64,
    pub loss: f64,
    pub fitted: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    pub group: GroupId,
    pub residuals: Vec<ObservationResidual>,
    /// `1 - SSE / SST` against the constant fit; 0 when the losses are constant.
    pub r_squared: f64,
    pub stderr: ParamStderr,
    /// Parameters whose standard error exceeds the estimate or is undefined.
    pub flagged: Vec<String>,
    pub caveat: String,
}

/// Residuals, R² and weakly identified parameters of `fit` on the
/// observations it was fitted from.
pub fn fit_diagnostics(fit: &FitResult, observations: &[LossObservation]) -> FitDiagnostics {
    let used: Vec<&LossObservation> = observations
        .iter()
        .filter(|o| o.group == fit.group && o.n_g >= fit.params.m_min)
        .collect();
    let residuals: Vec<ObservationResidual> = used
        .iter()
        .map(|o| {
            let fitted = fit.params.risk(o.n_g as f64, o.n as f64);
            ObservationResidual {
                n_g: o.n_g,
                n: o.n,
                loss: o.loss,
                fitted,
                residual: o.loss - fitted,
            }
        })
        .collect();
    let mean = used.iter().map(|o| o.loss).sum::<f64>() / used.len().max(1) as f64;
    let sst: f64 = used.iter().map(|o| (o.loss - mean).powi(2)).sum();
    let sse: f64 = residuals.iter().map(|r| r.residual * r.residual).sum();
    let sum_sq: f64 = used.iter().map(|o| o.loss * o.loss).sum();
    let r_squared = if sst > 1e-20 * sum_sq { 1.0 - sse / sst } else { 0.0 };
    let p = &fit.params;
    let estimates = [p.sigma2, p.p, p.tau2, p.q, p.delta];
    let flagged = fit
        .stderr
        .named()
        .iter()
        .zip(estimates)
        .filter(|((_, se), est)| se.is_none_or(|se| se > est.abs()))
        .map(|((name, _), _)| name.to_string())
        .collect();
    FitDiagnostics {
        group: fit.group,
        residuals,
        r_squared,
        stderr: fit.stderr,
        flagged,
        caveat: "Power-law estimates can be unstable: a range of parameters may fit the same data, \
                 and other curve families were not compared."
            .into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::normal;

    fn planted_obs(s: &GroupScaling, design: &[GroupCounts], reps: u64, noise: f64, seed: u64) -> Vec<LossObservation> {
        let mut out = Vec::new();
        for (i, c) in design.iter().enumerate() {
            for rep in 0..reps {
                let mut rng = stream_rng(seed, i as u64 * 1000 + rep);
                let (ng, n) = (c.per_group()[0], c.total());
                let loss = (s.risk(ng as f64, n as f64) + normal(&mut rng, 0.0, noise)).max(0.0);
                out.push(LossObservation::new(GroupId(0), ng, n, loss, Some(rep)).unwrap());
            }
        }
        out
    }

    fn b5_design() -> Vec<GroupCounts> {
        design_subset_grid(
            &[10_000, 10_000],
            &[0.125, 0.25, 0.5, 1.0],
            &[0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            &[SkipRule {
                fractions: vec![0.01],
                ratio_below: 1.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn design_count_and_symmetry() {
        let d = b5_design();
        assert_eq!(d.len(), 99);
        let set: BTreeSet<Vec<u64>> = d.iter().map(|c| c.per_group().to_vec()).collect();
        for c in &d {
            let swapped = vec![c.per_group()[1], c.per_group()[0]];
            assert!(set.contains(&swapped));
        }
        let single = design_subset_grid(&[500, 500], &[1.0], &[1.0], &[]).unwrap();
        assert_eq!(single, vec![GroupCounts::new(vec![500, 500])]);
        assert!(design_subset_grid(&[10, 10], &[1.0], &[0.01], &[]).is_err());
        assert!(design_subset_grid(&[10, 10], &[0.0], &[0.5], &[]).is_err());
    }

    #[test]
    fn noiseless_recovery() {
        let s = GroupScaling::new(2.0, 0.6, 0.5, 0.9, 0.01, 1).unwrap();
        let obs = planted_obs(&s, &b5_design(), 1, 0.0, 3);
        let fit = fit_group_scaling(&obs, GroupId(0), FitOptions::default()).unwrap();
        assert!(fit.residual_sse <= 1e-12, "{fit:?}");
        let f = fit.params;
        for (a, b) in [(f.sigma2, 2.0), (f.p, 0.6), (f.tau2, 0.5), (f.q, 0.9), (f.delta, 0.01)] {
            assert!((a - b).abs() <= 1e-8 * b.max(1.0), "{f:?}");
        }
        for o in &obs {
            let pred = f.risk(o.n_g as f64, o.n as f64);
            assert!((pred - o.loss).abs() <= 1e-6 * o.loss);
        }
        assert_eq!(fit.terms, Terms::FULL);
        let diag = fit_diagnostics(&fit, &obs);
        assert!((diag.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nested_selection_drops_absent_pooled_term() {
        let s = GroupScaling::new(3.61, 0.47, 0.0, 1.0, 1.1e-3, 1).unwrap();
        let obs = planted_obs(&s, &b5_design(), 3, 0.002, 2);
        let fit = fit_group_scaling(&obs, GroupId(0), FitOptions::default()).unwrap();
        assert!(!fit.terms.pooled);
        assert_eq!(fit.params.tau2, 0.0);
        assert_eq!(fit.stderr.tau2, None);
        let diag = fit_diagnostics(&fit, &obs);
        for name in ["sigma2", "p", "delta"] {
            assert!(!diag.flagged.iter().any(|f| f == name), "{diag:?}");
        }
        let ls = fit_group_scaling(
            &obs,
            GroupId(0),
            FitOptions {
                selection: Selection::LeastSquares,
                ..FitOptions::default()
            },
        )
        .unwrap();
        assert!(ls.residual_sse <= fit.residual_sse);
    }

    #[test]
    fn constant_loss() {
        let obs: Vec<LossObservation> = b5_design()
            .iter()
            .map(|c| LossObservation::new(GroupId(0), c.per_group()[0], c.total(), 0.3, None).unwrap())
            .collect();
        let fit = fit_group_scaling(&obs, GroupId(0), FitOptions::default()).unwrap();
        assert!((fit.params.delta - 0.3).abs() < 1e-9);
        assert!(fit.params.sigma2 < 1e-6 && fit.params.tau2 < 1e-6, "{fit:?}");
        assert_eq!(fit_diagnostics(&fit, &obs).r_squared, 0.0);
    }

    #[test]
    fn determinism_and_box() {
        let s = GroupScaling::new(3.61, 0.47, 0.0, 1.0, 1.1e-3, 1).unwrap();
        let obs = planted_obs(&s, &b5_design(), 2, 0.002, 9);
        let opts = FitOptions {
            m_min: 1,
            starts: 8,
            seed: 4,
            ..FitOptions::default()
        };
        let a = fit_group_scaling(&obs, GroupId(0), opts).unwrap();
        let b = fit_group_scaling(&obs, GroupId(0), opts).unwrap();
        assert_eq!(a, b);
        a.params.validate().unwrap();
        let mean = obs.iter().map(|o| o.loss).sum::<f64>() / obs.len() as f64;
        let sst: f64 = obs.iter().map(|o| (o.loss - mean).powi(2)).sum();
        assert!(a.residual_sse <= sst);
    }

    #[test]
    fn preconditions() {
        let mk = |ng, n| LossObservation::new(GroupId(0), ng, n, 0.1, None).unwrap();
        let few: Vec<_> = (1..6).map(|i| mk(i, 100 + i)).collect();
        assert!(matches!(
            fit_group_scaling(&few, GroupId(0), FitOptions::default()),
            Err(Error::InsufficientData(_))
        ));
        let same_ng: Vec<_> = (1..10).map(|i| mk(5, 100 + i)).collect();
        let err = fit_group_scaling(&same_ng, GroupId(0), FitOptions::default()).unwrap_err();
        assert!(err.to_string().contains("n_g"));
        let same_n: Vec<_> = (1..10).map(|i| mk(i, 100)).collect();
        let err = fit_group_scaling(&same_n, GroupId(0), FitOptions::default()).unwrap_err();
        assert!(err.to_string().contains("distinct n values"));
        let below: Vec<_> = (1..10).map(|i| mk(i, 100 + i)).collect();
        let opts = FitOptions {
            m_min: 5,
            ..FitOptions::default()
        };
        assert!(fit_group_scaling(&below, GroupId(0), opts).is_err());
        assert!(LossObservation::new(GroupId(0), 5, 4, 0.1, None).is_err());
        assert!(LossObservation::new(GroupId(0), 0, 4, 0.1, None).is_err());
    }

    #[test]
    fn excluding_small_groups_does_not_hurt_remaining_fit() {
        let s = GroupScaling::new(3.61, 0.47, 0.0, 1.0, 1.1e-3, 1).unwrap();
        let obs = planted_obs(&s, &b5_design(), 2, 0.002, 21);
        let ls = FitOptions {
            selection: Selection::LeastSquares,
            ..FitOptions::default()
        };
        let all = fit_group_scaling(&obs, GroupId(0), ls).unwrap();
        let opts = FitOptions { m_min: 500, ..ls };
        let restricted = fit_group_scaling(&obs, GroupId(0), opts).unwrap();
        assert_eq!(restricted.n_observations_used + restricted.excluded_below_mg, obs.len());
        let on_remaining: f64 = obs
            .iter()
            .filter(|o| o.n_g >= 500)
            .map(|o| (all.params.risk(o.n_g as f64, o.n as f64) - o.loss).powi(2))
            .sum();
        assert!(restricted.residual_sse <= on_remaining * (1.0 + 1e-9));
    }
}
