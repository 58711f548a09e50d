//! Synthetic data with known scaling behavior.
//!
//! The linear model shares weights across groups and shifts only the
//! intercept:
//!
//! ```text
//! y = beta^T x + c_g + N(0, sigma^2),   x ~ N(0, Sigma_x)
//! ```
//!
//! Least squares with one dummy per group then has group risk close to
//! `sigma^2 (1 + 1/n_g + d/(n - d - 1))`, i.e. a scaling curve with `p = 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::allocation::{sample_counts, DataGenerator, GroupCounts, GroupId, GroupedSample, Record};
use crate::error::{invalid, Error, Result};
use crate::fit::LossObservation;
use crate::optimal::ScalingModel;
use crate::par::map_indexed;
use crate::rng::{derive_seed, normal, standard_normal, stream_rng, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLinearGroupModel", into = "RawLinearGroupModel")]
pub struct LinearGroupModel {
    beta: Vec<f64>,
    intercepts: Vec<f64>,
    noise_sd: f64,
    feature_cov: DMatrix<f64>,
    chol: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinearGroupModel {
    beta: Vec<f64>,
    intercepts: Vec<f64>,
    noise_sd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_cov: Option<Vec<Vec<f64>>>,
}

impl TryFrom<RawLinearGroupModel> for LinearGroupModel {
    type Error = Error;
    fn try_from(r: RawLinearGroupModel) -> Result<Self> {
        let d = r.beta.len();
        let cov = match r.feature_cov {
            None => DMatrix::identity(d, d),
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|row| row.len() != d) {
                    return Err(invalid(format!("feature_cov must be {d}x{d}")));
                }
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
        };
        LinearGroupModel::new(r.beta, r.intercepts, r.noise_sd, Some(cov))
    }
}

impl From<LinearGroupModel> for RawLinearGroupModel {
    fn from(m: LinearGroupModel) -> Self {
        let d = m.dim();
        RawLinearGroupModel {
            feature_cov: Some((0..d).map(|i| (0..d).map(|j| m.feature_cov[(i, j)]).collect()).collect()),
            beta: m.beta,
            intercepts: m.intercepts,
            noise_sd: m.noise_sd,
        }
    }
}

impl LinearGroupModel {
    /// `feature_cov` defaults to the identity.
    pub fn new(beta: Vec<f64>, intercepts: Vec<f64>, noise_sd: f64, feature_cov: Option<DMatrix<f64>>) -> Result<Self> {
        let d = beta.len();
        if intercepts.is_empty() {
            return Err(invalid("at least one group intercept required"));
        }
        if beta.iter().chain(&intercepts).any(|v| !v.is_finite()) {
            return Err(invalid("beta and intercepts must be finite"));
        }
        if !(noise_sd > 0.0) || !noise_sd.is_finite() {
            return Err(invalid("noise_sd must be > 0"));
        }
        let feature_cov = feature_cov.unwrap_or_else(|| DMatrix::identity(d, d));
        if feature_cov.nrows() != d || feature_cov.ncols() != d {
            return Err(invalid(format!("feature_cov must be {d}x{d}")));
        }
        if (&feature_cov - feature_cov.transpose()).amax() > 1e-12 * feature_cov.amax().max(1.0) {
            return Err(invalid("feature_cov must be symmetric"));
        }
        let chol = feature_cov
            .clone()
            .cholesky()
            .ok_or_else(|| invalid("feature_cov must be positive definite"))?
            .l();
        Ok(Self {
            beta,
            intercepts,
            noise_sd,
            feature_cov,
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn groups(&self) -> usize {
        self.intercepts.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn feature_cov(&self) -> &DMatrix<f64> {
        &self.feature_cov
    }

    /// Generator for group `g`.
    pub fn generator(&self, g: GroupId) -> LinearGenerator<'_> {
        LinearGenerator {
            beta: &self.beta,
            intercept: self.intercepts[g.0],
            noise_sd: self.noise_sd,
            chol: &self.chol,
        }
    }

    fn draw_features(&self, rng: &mut StreamRng) -> Vec<f64> {
        correlated_normal(&self.chol, rng)
    }
}

fn correlated_normal(chol: &DMatrix<f64>, rng: &mut StreamRng) -> Vec<f64> {
    let d = chol.nrows();
    let z: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
    (0..d).map(|i| (0..=i).map(|k| chol[(i, k)] * z[k]).sum()).collect()
}

/// Draws `(x, y)` for one group of a linear model. The weights may differ
/// from the shared `beta` to build distribution-shift scenarios.
#[derive(Debug, Clone, Copy)]
pub struct LinearGenerator<'a> {
    pub beta: &'a [f64],
    pub intercept: f64,
    pub noise_sd: f64,
    pub chol: &'a DMatrix<f64>,
}

impl DataGenerator for LinearGenerator<'_> {
    fn draw(&self, rng: &mut StreamRng) -> std::result::Result<(Vec<f64>, f64), String> {
        let x = correlated_normal(self.chol, rng);
        let mean: f64 = self.beta.iter().zip(&x).map(|(b, x)| b * x).sum::<f64>() + self.intercept;
        let y = normal(rng, mean, self.noise_sd);
        Ok((x, y))
    }
}

/// Draws `counts` records from the model. Group `g` reads substream `g`.
pub fn generate_linear_group_data(model: &LinearGroupModel, counts: &GroupCounts, seed: u64) -> Result<GroupedSample> {
    if counts.groups() != model.groups() {
        return Err(invalid(format!(
            "counts have {} groups, model has {}",
            counts.groups(),
            model.groups()
        )));
    }
    let gens: Vec<LinearGenerator<'_>> = (0..model.groups()).map(|g| model.generator(GroupId(g))).collect();
    let refs: Vec<&dyn DataGenerator> = gens.iter().map(|g| g as &dyn DataGenerator).collect();
    sample_counts(&refs, counts, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    /// Intercepts in the original (uncentered) feature coordinates.
    pub intercepts: Vec<f64>,
}

/// Least squares on `[one-hot group | centered features]`.
pub fn ols_with_group_dummies(sample: &GroupedSample) -> Result<OlsFit> {
    let (beta, intercepts) = ols_present_groups(sample)?;
    let intercepts = intercepts.into_iter().collect::<Option<Vec<f64>>>().ok_or(Error::RankDeficient)?;
    Ok(OlsFit { beta, intercepts })
}

/// Like [`ols_with_group_dummies`] but groups without records get `None`
/// instead of making the design rank deficient.
pub(crate) fn ols_present_groups(sample: &GroupedSample) -> Result<(Vec<f64>, Vec<Option<f64>>)> {
    let records = sample.records();
    let n = records.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let d = records[0].features.len();
    if records.iter().any(|r| r.features.len() != d) {
        return Err(invalid("records have inconsistent feature dimension"));
    }
    let counts = sample.counts();
    let present: Vec<usize> = (0..sample.groups()).filter(|&g| counts.per_group()[g] > 0).collect();
    let mut column_of = vec![usize::MAX; sample.groups()];
    for (c, &g) in present.iter().enumerate() {
        column_of[g] = c;
    }
    let k = present.len() + d;
    if n < k {
        return Err(Error::RankDeficient);
    }
    let mut mean = vec![0.0; d];
    for r in records {
        for (m, x) in mean.iter_mut().zip(&r.features) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut a = DMatrix::zeros(n, k);
    let mut y = DVector::zeros(n);
    for (i, r) in records.iter().enumerate() {
        a[(i, column_of[r.group.0])] = 1.0;
        for j in 0..d {
            a[(i, present.len() + j)] = r.features[j] - mean[j];
        }
        y[i] = r.label;
    }
    let coef = solve_least_squares(a, y)?;
    let beta: Vec<f64> = coef.iter().skip(present.len()).cloned().collect();
    let shift: f64 = beta.iter().zip(&mean).map(|(b, m)| b * m).sum();
    let mut intercepts = vec![None; sample.groups()];
    for (c, &g) in present.iter().enumerate() {
        intercepts[g] = Some(coef[c] - shift);
    }
    Ok((beta, intercepts))
}

fn solve_least_squares(a: DMatrix<f64>, y: DVector<f64>) -> Result<DVector<f64>> {
    let k = a.ncols();
    let qr = a.qr();
    let r = qr.r();
    let scale = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if k > 0 && (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OlsRiskPrediction {
    /// `sigma^2 (1 + 1/n_g + d/(n - d - 1))`.
    pub per_group_risk: f64,
    pub base: f64,
    pub intercept_term: f64,
    pub shared_term: f64,
    /// Upper bound on the omitted `E[xbar^T S^-1 xbar]` term,
    /// `sigma^2 d / (n_g (n - d - 2))`.
    pub mean_term_bound: f64,
}

/// Expected risk of the dummy-augmented least-squares fit on one group.
pub fn predict_ols_group_risk(model: &LinearGroupModel, n_g: u64, n: u64) -> Result<OlsRiskPrediction> {
    let d = model.dim();
    if n <= d as u64 + 2 {
        return Err(Error::WishartUndefined { n, d });
    }
    if n_g < 1 || n_g > n {
        return Err(invalid(format!("need 1 <= n_g <= n, got n_g = {n_g}, n = {n}")));
    }
    let s2 = model.noise_sd * model.noise_sd;
    let (ng, nf, df) = (n_g as f64, n as f64, d as f64);
    let base = s2;
    let intercept_term = s2 / ng;
    let shared_term = s2 * df / (nf - df - 1.0);
    Ok(OlsRiskPrediction {
        per_group_risk: base + intercept_term + shared_term,
        base,
        intercept_term,
        shared_term,
        mean_term_bound: s2 * df / (ng * (nf - df - 2.0)),
    })
}

/// Monte Carlo group risk of the least-squares fit.
///
/// Each trial draws a training set with `counts`, fits, and scores the fit on
/// `eval_size` fresh feature draws per group. Label noise at evaluation time
/// is integrated exactly (it adds `sigma^2`), which leaves only the
/// estimation error to Monte Carlo. Trial `t` uses seed `derive_seed(seed, t)`.
pub fn empirical_group_risk(
    model: &LinearGroupModel,
    counts: &GroupCounts,
    eval_size: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if trials < 1 || eval_size < 1 {
        return Err(invalid("trials and eval_size must be >= 1"));
    }
    let groups = model.groups();
    let noise_var = model.noise_sd * model.noise_sd;
    let per_trial: Vec<Result<Vec<f64>>> = map_indexed(trials, |t| {
        let trial_seed = derive_seed(seed, t as u64);
        let sample = generate_linear_group_data(model, counts, trial_seed)?;
        let fit = ols_with_group_dummies(&sample)?;
        let dbeta: Vec<f64> = fit.beta.iter().zip(&model.beta).map(|(a, b)| a - b).collect();
        let eval_seed = derive_seed(trial_seed, u64::MAX);
        Ok((0..groups)
            .map(|g| {
                let mut rng = stream_rng(eval_seed, g as u64);
                let dc = fit.intercepts[g] - model.intercepts[g];
                let mut sum = 0.0;
                for _ in 0..eval_size {
                    let x = model.draw_features(&mut rng);
                    let e: f64 = dbeta.iter().zip(&x).map(|(b, x)| b * x).sum::<f64>() + dc;
                    sum += e * e;
                }
                sum / eval_size as f64 + noise_var
            })
            .collect())
    });
    let mut totals = vec![0.0; groups];
    for risks in per_trial {
        for (t, r) in totals.iter_mut().zip(risks?) {
            *t += r;
        }
    }
    Ok(totals.into_iter().map(|t| t / trials as f64).collect())
}

/// Losses on the scaling curve plus Gaussian noise, truncated at 0. One
/// observation per group; group `g` reads substream `g`.
pub fn power_law_loss_oracle(
    model: &ScalingModel,
    counts: &GroupCounts,
    noise_sd: f64,
    seed: u64,
) -> Result<Vec<LossObservation>> {
    if counts.groups() != model.groups() {
        return Err(invalid("counts and model differ in number of groups"));
    }
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(invalid("noise_sd must be finite and >= 0"));
    }
    if let Some(g) = counts.per_group().iter().position(|&c| c < 1) {
        return Err(invalid(format!("group {g} has no samples")));
    }
    let n = counts.total();
    (0..model.groups())
        .map(|g| {
            let n_g = counts.per_group()[g];
            let mut rng = stream_rng(seed, g as u64);
            let clean = model.per_group[g].risk(n_g as f64, n as f64);
            let loss = if noise_sd > 0.0 {
                normal(&mut rng, clean, noise_sd).max(0.0)
            } else {
                clean
            };
            LossObservation::new(GroupId(g), n_g, n, loss, None)
        })
        .collect()
}

impl Record {
    /// Prediction of a fitted linear model for this record.
    pub fn predict(&self, beta: &[f64], intercept: f64) -> f64 {
        beta.iter().zip(&self.features).map(|(b, x)| b * x).sum::<f64>() + intercept
    }
}
