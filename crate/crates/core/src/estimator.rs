//! The group-weighted loss estimator
//!
//! ```text
//! L(w, alpha, n) = (1/n) * sum_i w(g_i) * loss_i
//! ```
//!
//! for a fixed predictor, with training instances drawn by sampling from
//! `alpha`. Importance weighting and (for convex losses) group DRO are both
//! instances of this estimator with particular weights. Every `(w, alpha)`
//! pair implicitly targets the group mixture `gamma'_g ∝ w(g) alpha_g`; among
//! all pairs targeting the same mixture, weights `∝ Var_g^-1/2` give the
//! smallest variance.

use serde::Serialize;

use crate::allocation::{counts_from_allocation, Allocation, PopulationSpec};
use crate::error::{invalid, Error, Result};
use crate::par::{map_indexed, mean_and_variance};
use crate::rng::{normal, stream_rng, StreamRng};

/// Importance weights above this ratio are flagged as high variance.
pub const IW_HIGH_VARIANCE_RATIO: f64 = 5.0;
/// Absolute tolerance for treating group losses as tied in GDRO weights.
pub const GDRO_TIE_TOL: f64 = 1e-9;

/// Per-group mean and variance of the loss of a fixed predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLossMoments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl GroupLossMoments {
    pub fn new(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        if mean.len() != variance.len() || mean.is_empty() {
            return Err(invalid("mean and variance must be non-empty and equal length"));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(invalid("loss means must be finite"));
        }
        if variance.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("loss variances must be finite and >= 0"));
        }
        Ok(Self { mean, variance })
    }

    pub fn groups(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEstimatorSpec {
    pub weights: Vec<f64>,
    pub alpha: Allocation,
    pub n: u64,
}

impl WeightedEstimatorSpec {
    pub fn new(weights: Vec<f64>, alpha: Allocation, n: u64) -> Result<Self> {
        if weights.len() != alpha.len() {
            return Err(invalid("weights and allocation differ in length"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("weights must be finite and >= 0"));
        }
        if n == 0 {
            return Err(invalid("n must be > 0"));
        }
        let c: f64 = weights.iter().zip(alpha.weights()).map(|(w, a)| w * a).sum();
        if !(c > 0.0) {
            return Err(invalid("sum_g alpha_g w(g) must be > 0"));
        }
        Ok(Self { weights, alpha, n })
    }

    pub fn groups(&self) -> usize {
        self.weights.len()
    }

    fn check(&self, moments: &GroupLossMoments) -> Result<()> {
        if moments.groups() != self.groups() {
            return Err(invalid(format!(
                "moments have {} groups, estimator has {}",
                moments.groups(),
                self.groups()
            )));
        }
        Ok(())
    }
}

/// Mixture `gamma'` the estimator targets, and its scale `c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicitTarget {
    pub gamma_prime: Vec<f64>,
    pub c: f64,
}

pub fn implicit_target(spec: &WeightedEstimatorSpec) -> ImplicitTarget {
    let products: Vec<f64> = spec
        .weights
        .iter()
        .zip(spec.alpha.weights())
        .map(|(w, a)| w * a)
        .collect();
    let c: f64 = products.iter().sum();
    ImplicitTarget {
        gamma_prime: products.iter().map(|x| x / c).collect(),
        c,
    }
}

/// `E[L] = sum_g alpha_g w(g) mean_g`.
pub fn estimator_mean(spec: &WeightedEstimatorSpec, moments: &GroupLossMoments) -> Result<f64> {
    spec.check(moments)?;
    Ok(spec
        .weights
        .iter()
        .zip(spec.alpha.weights())
        .zip(&moments.mean)
        .map(|((w, a), m)| a * w * m)
        .sum())
}

/// `Var[L] = (1/n) sum_g alpha_g w(g)^2 Var_g`.
pub fn estimator_variance(spec: &WeightedEstimatorSpec, moments: &GroupLossMoments) -> Result<f64> {
    spec.check(moments)?;
    let s: f64 = spec
        .weights
        .iter()
        .zip(spec.alpha.weights())
        .zip(&moments.variance)
        .map(|((w, a), v)| a * w * w * v)
        .sum();
    Ok(s / spec.n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalPair {
    pub w_star: Vec<f64>,
    pub alpha_star: Allocation,
    pub target: ImplicitTarget,
}

impl OptimalPair {
    pub fn spec(&self, n: u64) -> Result<WeightedEstimatorSpec> {
        WeightedEstimatorSpec::new(self.w_star.clone(), self.alpha_star.clone(), n)
    }
}

/// Variance-minimizing `(w*, alpha*)` with the same implicit target as `spec`.
///
/// `alpha*_g ∝ gamma'_g sqrt(Var_g)` and `w*(g) = c * S / sqrt(Var_g)` with
/// `S = sum_g gamma'_g sqrt(Var_g)`, so that `w*(g) alpha*_g = c gamma'_g`
/// for every group and the estimator mean is unchanged.
pub fn optimal_pair(spec: &WeightedEstimatorSpec, moments: &GroupLossMoments) -> Result<OptimalPair> {
    spec.check(moments)?;
    if let Some(g) = moments.variance.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroVarianceGroup(g));
    }
    let target = implicit_target(spec);
    let sd: Vec<f64> = moments.variance.iter().map(|v| v.sqrt()).collect();
    let raw: Vec<f64> = target.gamma_prime.iter().zip(&sd).map(|(g, s)| g * s).collect();
    let s: f64 = raw.iter().sum();
    let alpha_star = Allocation::normalized(&raw)?;
    let w_star = sd.iter().map(|sd_g| target.c * s / sd_g).collect();
    Ok(OptimalPair {
        w_star,
        alpha_star,
        target,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IwWeights {
    pub weights: Vec<f64>,
    pub max_ratio: f64,
    /// Some weight exceeds [`IW_HIGH_VARIANCE_RATIO`].
    pub high_variance: bool,
}

/// Importance weights `gamma_g / alpha_g`.
pub fn iw_weights(pop: &PopulationSpec, alpha: &Allocation) -> Result<IwWeights> {
    if pop.groups() != alpha.len() {
        return Err(invalid("gamma and allocation differ in length"));
    }
    let mut weights = Vec::with_capacity(alpha.len());
    for (g, (&gamma, &a)) in pop.gamma().iter().zip(alpha.weights()).enumerate() {
        if a == 0.0 {
            return Err(Error::UnrepresentedGroup(g));
        }
        weights.push(gamma / a);
    }
    let max_ratio = weights.iter().cloned().fold(0.0, f64::max);
    Ok(IwWeights {
        high_variance: max_ratio > IW_HIGH_VARIANCE_RATIO,
        max_ratio,
        weights,
    })
}

/// Group weights whose weighted objective matches group DRO at the given
/// per-group empirical losses: uniform mass on the worst group(s).
///
/// The correspondence only holds for losses convex in the model parameters.
pub fn gdro_convex_weights(group_losses: &[f64]) -> Result<Vec<f64>> {
    if group_losses.is_empty() {
        return Err(invalid("no group losses"));
    }
    if group_losses.iter().any(|l| !l.is_finite()) {
        return Err(invalid("group losses must be finite"));
    }
    let worst = group_losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<bool> = group_losses.iter().map(|&l| worst - l <= GDRO_TIE_TOL).collect();
    let k = tied.iter().filter(|&&t| t).count() as f64;
    Ok(tied.iter().map(|&t| if t { 1.0 / k } else { 0.0 }).collect())
}

/// Draws one instance loss for a group.
pub trait LossSampler: Sync {
    fn sample(&self, rng: &mut StreamRng) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct GaussianLoss {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianLoss {
    pub fn from_moments(moments: &GroupLossMoments) -> Vec<GaussianLoss> {
        moments
            .mean
            .iter()
            .zip(&moments.variance)
            .map(|(&mean, &v)| GaussianLoss { mean, sd: v.sqrt() })
            .collect()
    }
}

impl LossSampler for GaussianLoss {
    fn sample(&self, rng: &mut StreamRng) -> f64 {
        normal(rng, self.mean, self.sd)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantLoss(pub f64);

impl LossSampler for ConstantLoss {
    fn sample(&self, _: &mut StreamRng) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of `mean`.
    pub mean_se: f64,
    /// Standard error of `variance`, from the empirical fourth moment.
    pub variance_se: f64,
}

/// Simulates the estimator `trials` times with the floored counts of
/// `spec.alpha`. Trial `t` reads substream `t` of `seed`.
pub fn monte_carlo_estimator(
    spec: &WeightedEstimatorSpec,
    samplers: &[&dyn LossSampler],
    trials: usize,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if trials < 2 {
        return Err(invalid("monte carlo needs at least 2 trials"));
    }
    if samplers.len() != spec.groups() {
        return Err(invalid("one loss sampler per group required"));
    }
    let counts = counts_from_allocation(&spec.alpha, spec.n).counts;
    let n = spec.n as f64;
    let values = map_indexed(trials, |t| {
        let mut rng = stream_rng(seed, t as u64);
        let mut total = 0.0;
        for (g, &n_g) in counts.per_group().iter().enumerate() {
            let mut group_sum = 0.0;
            for _ in 0..n_g {
                group_sum += samplers[g].sample(&mut rng);
            }
            total += spec.weights[g] * group_sum;
        }
        total / n
    });
    let (mean, variance) = mean_and_variance(&values);
    let m4 = values.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / trials as f64;
    let t = trials as f64;
    Ok(MonteCarloSummary {
        trials,
        mean,
        variance,
        mean_se: (variance / t).sqrt(),
        variance_se: ((m4 - variance * variance).max(0.0) / t).sqrt(),
    })
}
