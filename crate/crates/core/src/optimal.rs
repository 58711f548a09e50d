//! Allocations that minimize forecast risk under the per-group power-law
//! scaling model
//!
//! ```text
//! r_g(n_g, n) = sigma2_g * n_g^(-p_g) + tau2_g * n^(-q_g) + delta_g
//! ```
//!
//! The population objective `sum_g gamma_g r_g(alpha_g n, n)` is convex and
//! separable on the simplex. With a shared exponent the minimizer is
//! `alpha_g ∝ (gamma_g sigma2_g)^(1/(p+1))`; with group-specific exponents it
//! is found by bisection on the KKT multiplier (water-filling). The two-group
//! minmax objective is solved by bisection on the share of group A.

use serde::{Deserialize, Serialize};

use crate::allocation::{Allocation, GroupId, PopulationSpec};
use crate::error::{invalid, Error, Result};

/// Scaling parameters of one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGroupScaling")]
pub struct GroupScaling {
    pub sigma2: f64,
    pub p: f64,
    pub tau2: f64,
    pub q: f64,
    pub delta: f64,
    /// Smallest group size for which the model is trusted.
    pub m_min: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroupScaling {
    sigma2: f64,
    p: f64,
    tau2: f64,
    q: f64,
    delta: f64,
    #[serde(default = "one")]
    m_min: u64,
}

fn one() -> u64 {
    1
}

impl TryFrom<RawGroupScaling> for GroupScaling {
    type Error = Error;
    fn try_from(r: RawGroupScaling) -> Result<Self> {
        GroupScaling::new(r.sigma2, r.p, r.tau2, r.q, r.delta, r.m_min)
    }
}

/// Upper end of the exponent box shared with the fitting constraints.
pub const MAX_EXPONENT: f64 = 2.0;

impl GroupScaling {
    pub fn new(sigma2: f64, p: f64, tau2: f64, q: f64, delta: f64, m_min: u64) -> Result<Self> {
        let s = Self {
            sigma2,
            p,
            tau2,
            q,
            delta,
            m_min,
        };
        s.validate()?;
        Ok(s)
    }

    /// Model with only a group-specific term: `sigma2 * n_g^-p`.
    pub fn group_only(sigma2: f64, p: f64) -> Result<Self> {
        Self::new(sigma2, p, 0.0, 1.0, 0.0, 1)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma2", self.sigma2), ("tau2", self.tau2), ("delta", self.delta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !v.is_finite() || !(0.0..=MAX_EXPONENT).contains(&v) {
                return Err(invalid(format!("{name} = {v} must lie in [0, 2]")));
            }
        }
        if self.m_min < 1 {
            return Err(invalid("m_min must be >= 1"));
        }
        Ok(())
    }

    /// Evaluates the scaling curve. `n_g = 0` is only finite when `sigma2 = 0`.
    pub fn risk(&self, n_g: f64, n: f64) -> f64 {
        let group_term = if self.sigma2 == 0.0 {
            0.0
        } else if n_g <= 0.0 {
            f64::INFINITY
        } else {
            self.sigma2 * n_g.powf(-self.p)
        };
        let pooled_term = if self.tau2 == 0.0 {
            0.0
        } else {
            self.tau2 * n.powf(-self.q)
        };
        group_term + pooled_term + self.delta
    }
}

/// Per-group scaling parameters for a whole population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalingModel {
    pub per_group: Vec<GroupScaling>,
}

impl ScalingModel {
    pub fn new(per_group: Vec<GroupScaling>) -> Result<Self> {
        if per_group.is_empty() {
            return Err(invalid("scaling model needs at least one group"));
        }
        for g in &per_group {
            g.validate()?;
        }
        Ok(Self { per_group })
    }

    pub fn groups(&self) -> usize {
        self.per_group.len()
    }

    pub fn group(&self, g: GroupId) -> &GroupScaling {
        &self.per_group[g.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    WaterFilling,
    Bisection,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalAllocationResult {
    pub alpha: Allocation,
    pub objective_value: f64,
    /// Every group has `sigma2 = 0`, so any allocation is optimal.
    pub degenerate: bool,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupForecast {
    pub risk: f64,
    /// `n_g` lies below the group's `m_min`.
    pub extrapolated: bool,
}

/// Forecast risk of group `g` trained with `n_g` of its own samples out of `n`.
pub fn forecast_group_risk(model: &ScalingModel, g: GroupId, n_g: f64, n: f64) -> Result<GroupForecast> {
    let params = model
        .per_group
        .get(g.0)
        .ok_or_else(|| invalid(format!("group {g} not in model")))?;
    if !n.is_finite() || n <= 0.0 {
        return Err(invalid(format!("n = {n} must be > 0")));
    }
    if !n_g.is_finite() || n_g < 0.0 {
        return Err(invalid(format!("n_g = {n_g} must be >= 0")));
    }
    if n_g > n * (1.0 + 1e-12) {
        return Err(invalid(format!("n_g = {n_g} exceeds n = {n}")));
    }
    if n_g == 0.0 && params.sigma2 > 0.0 {
        return Err(Error::UnboundedRisk { group: g.0, n_g });
    }
    Ok(GroupForecast {
        risk: params.risk(n_g, n),
        extrapolated: n_g < params.m_min as f64,
    })
}

fn check_groups(model: &ScalingModel, pop: &PopulationSpec) -> Result<()> {
    if model.groups() != pop.groups() {
        return Err(invalid(format!(
            "model has {} groups but gamma has {}",
            model.groups(),
            pop.groups()
        )));
    }
    Ok(())
}

/// Approximated population risk `sum_g gamma_g r_g(alpha_g n, n)`.
///
/// Returns `+inf` when a group with `sigma2 > 0` receives no samples.
pub fn forecast_population_risk(
    model: &ScalingModel,
    pop: &PopulationSpec,
    alpha: &Allocation,
    n: f64,
) -> Result<f64> {
    check_groups(model, pop)?;
    if alpha.len() != pop.groups() {
        return Err(invalid("allocation and gamma differ in length"));
    }
    if !n.is_finite() || n <= 0.0 {
        return Err(invalid(format!("n = {n} must be > 0")));
    }
    let mut total = 0.0;
    for (g, (&gamma, params)) in pop.gamma().iter().zip(&model.per_group).enumerate() {
        let n_g = alpha.weights()[g] * n;
        total += gamma * params.risk(n_g, n);
    }
    Ok(total)
}

fn check_exponent(p: f64) -> Result<()> {
    if !p.is_finite() || p <= 0.0 {
        return Err(invalid(format!("exponent {p} must be > 0")));
    }
    Ok(())
}

/// Population-risk minimizer for a shared exponent `p`.
///
/// The reported objective is the `n`-free part `sum_g gamma_g sigma2_g alpha_g^-p`.
pub fn optimal_allocation_closed_form(
    pop: &PopulationSpec,
    sigma2: &[f64],
    p: f64,
) -> Result<OptimalAllocationResult> {
    check_exponent(p)?;
    if sigma2.len() != pop.groups() {
        return Err(invalid("sigma2 and gamma differ in length"));
    }
    if sigma2.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(invalid("sigma2 entries must be finite and >= 0"));
    }
    if sigma2.iter().all(|&s| s == 0.0) {
        return Ok(OptimalAllocationResult {
            alpha: pop.as_allocation(),
            objective_value: 0.0,
            degenerate: true,
            method: Method::ClosedForm,
        });
    }
    let raw: Vec<f64> = pop
        .gamma()
        .iter()
        .zip(sigma2)
        .map(|(&g, &s)| (g * s).powf(1.0 / (p + 1.0)))
        .collect();
    let alpha = Allocation::normalized(&raw)?;
    let objective_value = pop
        .gamma()
        .iter()
        .zip(sigma2)
        .zip(alpha.weights())
        .filter(|((_, &s), _)| s > 0.0)
        .map(|((&g, &s), &a)| g * s * a.powf(-p))
        .sum();
    Ok(OptimalAllocationResult {
        alpha,
        objective_value,
        degenerate: false,
        method: Method::ClosedForm,
    })
}

const MAX_BISECTION_STEPS: usize = 200;
const SIMPLEX_SUM_TOL: f64 = 1e-10;

/// Population-risk minimizer with group-specific exponents, by water-filling.
///
/// Stationarity gives `alpha_g(lambda) = (p_g gamma_g sigma2_g n^-p_g / lambda)^(1/(p_g+1))`
/// for every group with `sigma2_g > 0`; `sum_g alpha_g(lambda)` is continuous
/// and strictly decreasing, so the multiplier is bracketed and bisected in
/// log space. Groups with `sigma2_g = 0` receive nothing.
pub fn optimal_allocation_general(
    model: &ScalingModel,
    pop: &PopulationSpec,
    n: f64,
) -> Result<OptimalAllocationResult> {
    check_groups(model, pop)?;
    if !n.is_finite() || n <= 0.0 {
        return Err(invalid(format!("n = {n} must be > 0")));
    }
    let active: Vec<usize> = (0..model.groups())
        .filter(|&g| model.per_group[g].sigma2 > 0.0)
        .collect();
    if active.is_empty() {
        let alpha = pop.as_allocation();
        let objective_value = forecast_population_risk(model, pop, &alpha, n)?;
        return Ok(OptimalAllocationResult {
            alpha,
            objective_value,
            degenerate: true,
            method: Method::WaterFilling,
        });
    }
    for &g in &active {
        check_exponent(model.per_group[g].p)?;
    }

    let ln_n = n.ln();
    // ln a_g, where alpha_g = (a_g / lambda)^(1/(p_g+1))
    let ln_a: Vec<(f64, f64)> = active
        .iter()
        .map(|&g| {
            let s = &model.per_group[g];
            (s.p.ln() + pop.gamma()[g].ln() + s.sigma2.ln() - s.p * ln_n, s.p)
        })
        .collect();
    let shares = |mu: f64| -> f64 {
        ln_a.iter()
            .map(|&(la, p)| ((la - mu) / (p + 1.0)).exp())
            .sum::<f64>()
    };
    let ln_k = (active.len() as f64).ln();
    // At mu_lo some group alone takes share 1; at mu_hi every share is <= 1/k.
    let mut lo = ln_a.iter().map(|&(la, _)| la).fold(f64::INFINITY, f64::min);
    let mut hi = ln_a
        .iter()
        .map(|&(la, p)| la + (p + 1.0) * ln_k)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut mu = 0.5 * (lo + hi);
    let mut residual = shares(mu) - 1.0;
    let mut steps = 0;
    while residual.abs() > SIMPLEX_SUM_TOL {
        if steps == MAX_BISECTION_STEPS {
            return Err(Error::NonConvergence {
                steps,
                lo,
                hi,
                residual,
            });
        }
        if residual > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        mu = 0.5 * (lo + hi);
        residual = shares(mu) - 1.0;
        steps += 1;
    }

    let mut raw = vec![0.0; model.groups()];
    for (&g, &(la, p)) in active.iter().zip(&ln_a) {
        raw[g] = ((la - mu) / (p + 1.0)).exp();
    }
    let alpha = Allocation::normalized(&raw)?;
    let objective_value = forecast_population_risk(model, pop, &alpha, n)?;
    Ok(OptimalAllocationResult {
        alpha,
        objective_value,
        degenerate: false,
        method: Method::WaterFilling,
    })
}

/// Largest forecast group risk when group A receives share `a` of `n`.
pub fn max_group_forecast(model: &ScalingModel, a: f64, n: f64) -> f64 {
    let ra = model.per_group[0].risk(a * n, n);
    let rb = model.per_group[1].risk((1.0 - a) * n, n);
    ra.max(rb)
}

/// Two-group allocation minimizing the largest forecast group risk.
///
/// Group A's forecast decreases and group B's increases in A's share, so the
/// optimum equalizes them when possible. Shares are confined to
/// `[1/n, 1 - 1/n]` (at least one sample per group); when one curve
/// dominates on that whole interval the optimum sits at its end.
pub fn minmax_allocation(model: &ScalingModel, n: f64) -> Result<OptimalAllocationResult> {
    if model.groups() != 2 {
        return Err(invalid(format!(
            "minmax allocation requires exactly two groups, got {}",
            model.groups()
        )));
    }
    if !n.is_finite() || n < 2.0 {
        return Err(invalid(format!("n = {n} must be >= 2")));
    }
    let (ga, gb) = (&model.per_group[0], &model.per_group[1]);
    if ga.sigma2 == 0.0 && gb.sigma2 == 0.0 {
        let alpha = Allocation::two_group(0.5)?;
        return Ok(OptimalAllocationResult {
            objective_value: max_group_forecast(model, 0.5, n),
            alpha,
            degenerate: true,
            method: Method::Bisection,
        });
    }
    let gap = |a: f64| ga.risk(a * n, n) - gb.risk((1.0 - a) * n, n);
    let (mut lo, mut hi) = (1.0 / n, 1.0 - 1.0 / n);
    let share = if gap(lo) <= 0.0 {
        lo
    } else if gap(hi) >= 0.0 {
        hi
    } else {
        for _ in 0..MAX_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if gap(lo).abs() <= gap(hi).abs() {
            lo
        } else {
            hi
        }
    };
    Ok(OptimalAllocationResult {
        alpha: Allocation::two_group(share)?,
        objective_value: max_group_forecast(model, share, n),
        degenerate: false,
        method: Method::Bisection,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corollary1Row {
    pub group: GroupId,
    pub gamma: f64,
    pub alpha_star: f64,
    pub holds: bool,
}

/// With equal `sigma`, checks `alpha*_g >= gamma_g` for every group with
/// `gamma_g <= 1/|G|`.
pub fn corollary1_check(pop: &PopulationSpec, p: f64) -> Result<Vec<Corollary1Row>> {
    let k = pop.groups();
    let opt = optimal_allocation_closed_form(pop, &vec![1.0; k], p)?;
    let threshold = 1.0 / k as f64;
    Ok(pop
        .gamma()
        .iter()
        .enumerate()
        .filter(|(_, &gamma)| gamma <= threshold * (1.0 + 1e-12))
        .map(|(g, &gamma)| {
            let alpha_star = opt.alpha.weights()[g];
            Corollary1Row {
                group: GroupId(g),
                gamma,
                alpha_star,
                holds: alpha_star >= gamma * (1.0 - 1e-12),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corollary2Bounds {
    pub lower: f64,
    pub upper: f64,
    pub alpha_star_a: f64,
}

/// Bounds on the minority group's optimal share in a two-group population.
pub fn corollary2_bounds(gamma_a: f64, sigma2_a: f64, sigma2_b: f64, p: f64) -> Result<Corollary2Bounds> {
    if !gamma_a.is_finite() || gamma_a <= 0.0 {
        return Err(invalid(format!("gamma_A = {gamma_a} must be > 0")));
    }
    if gamma_a >= 0.5 {
        return Err(Error::NotMinority(gamma_a));
    }
    for (name, v) in [("sigma2_A", sigma2_a), ("sigma2_B", sigma2_b)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(invalid(format!("{name} = {v} must be > 0")));
        }
    }
    check_exponent(p)?;
    let gamma_b = 1.0 - gamma_a;
    let sa = sigma2_a.powf(1.0 / (p + 1.0));
    let sb = sigma2_b.powf(1.0 / (p + 1.0));
    let lower = gamma_a * sa / (gamma_a * sa + gamma_b * sb);
    let upper = sa / (sa + sb);
    let pop = PopulationSpec::new(vec![gamma_a, gamma_b])?;
    let alpha_star_a = optimal_allocation_closed_form(&pop, &[sigma2_a, sigma2_b], p)?
        .alpha
        .weights()[0];
    Ok(Corollary2Bounds {
        lower,
        upper,
        alpha_star_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model(rows: &[(f64, f64, f64, f64, f64)]) -> ScalingModel {
        ScalingModel::new(
            rows.iter()
                .map(|&(s, p, t, q, d)| GroupScaling::new(s, p, t, q, d, 1).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn forecast_cifar_animal_row() {
        let tau = 4.5e-9f64;
        let m = model(&[(1.9f64 * 1.9, 0.47, tau * tau, 2.0, 1.1e-3)]);
        let r = forecast_group_risk(&m, GroupId(0), 1000.0, 2000.0).unwrap();
        // independent re-evaluation of the curve
        let expected = 3.61 * (-(0.47f64) * 1000f64.ln()).exp() + 1.1e-3;
        assert_relative_eq!(r.risk, expected, max_relative = 1e-12);
        assert!((r.risk - 0.1416).abs() < 1e-4);
        assert!(!r.extrapolated);
    }

    #[test]
    fn forecast_constant_and_power_identity() {
        let m = model(&[(0.0, 1.0, 0.0, 1.0, 0.3)]);
        for (ng, n) in [(1.0, 1.0), (10.0, 1000.0), (0.0, 5.0)] {
            assert_eq!(forecast_group_risk(&m, GroupId(0), ng, n).unwrap().risk, 0.3);
        }
        let m = model(&[(2.0, 1.0, 0.0, 1.0, 0.0)]);
        let a = forecast_group_risk(&m, GroupId(0), 100.0, 1000.0).unwrap().risk;
        let b = forecast_group_risk(&m, GroupId(0), 200.0, 1000.0).unwrap().risk;
        assert_relative_eq!(b, a / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn forecast_errors_and_flags() {
        let mut m = model(&[(1.0, 0.5, 0.0, 1.0, 0.0)]);
        m.per_group[0].m_min = 50;
        assert!(matches!(
            forecast_group_risk(&m, GroupId(0), 0.0, 10.0),
            Err(Error::UnboundedRisk { group: 0, .. })
        ));
        assert!(forecast_group_risk(&m, GroupId(0), 20.0, 10.0).is_err());
        assert!(forecast_group_risk(&m, GroupId(1), 1.0, 10.0).is_err());
        assert!(forecast_group_risk(&m, GroupId(0), 10.0, 100.0).unwrap().extrapolated);
        assert!(!forecast_group_risk(&m, GroupId(0), 50.0, 100.0).unwrap().extrapolated);
    }

    #[test]
    fn population_forecast() {
        let m = model(&[(1.0, 0.5, 0.2, 0.3, 0.01), (2.0, 0.7, 0.1, 0.9, 0.02)]);
        let pop = PopulationSpec::new(vec![0.3, 0.7]).unwrap();
        let alpha = Allocation::new(vec![0.4, 0.6]).unwrap();
        let n = 5000.0;
        let got = forecast_population_risk(&m, &pop, &alpha, n).unwrap();
        let mut brute = 0.0;
        for g in 0..2 {
            let s = &m.per_group[g];
            let ng = alpha.weights()[g] * n;
            brute += pop.gamma()[g] * (s.sigma2 / ng.powf(s.p) + s.tau2 / n.powf(s.q) + s.delta);
        }
        assert_relative_eq!(got, brute, max_relative = 1e-14);

        let single = model(&[(1.0, 0.5, 0.2, 0.3, 0.01)]);
        let one = PopulationSpec::new(vec![1.0]).unwrap();
        let a1 = Allocation::new(vec![1.0]).unwrap();
        assert_eq!(
            forecast_population_risk(&single, &one, &a1, 100.0).unwrap(),
            forecast_group_risk(&single, GroupId(0), 100.0, 100.0).unwrap().risk
        );

        let sym = model(&[(1.0, 0.5, 0.2, 0.3, 0.01), (1.0, 0.5, 0.2, 0.3, 0.01)]);
        let half = PopulationSpec::new(vec![0.5, 0.5]).unwrap();
        let ah = Allocation::new(vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(
            forecast_population_risk(&sym, &half, &ah, 100.0).unwrap(),
            forecast_group_risk(&sym, GroupId(0), 50.0, 100.0).unwrap().risk,
            max_relative = 1e-15
        );

        let edge = Allocation::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(forecast_population_risk(&m, &pop, &edge, n).unwrap(), f64::INFINITY);
    }

    #[test]
    fn closed_form_examples() {
        let pop = PopulationSpec::new(vec![0.1, 0.9]).unwrap();
        let r = optimal_allocation_closed_form(&pop, &[1.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(r.alpha.weights()[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(r.alpha.weights()[1], 0.75, epsilon = 1e-15);

        let pop = PopulationSpec::new(vec![0.68, 0.30, 0.01, 0.01]).unwrap();
        let r = optimal_allocation_closed_form(&pop, &[1.0; 4], 1.0).unwrap();
        assert!(r.alpha.weights()[1] > 0.3);
        assert!((r.alpha.weights()[1] - 0.3483).abs() < 1e-4);

        let pop = PopulationSpec::new(vec![0.25; 4]).unwrap();
        let r = optimal_allocation_closed_form(&pop, &[3.0; 4], 0.7).unwrap();
        for &a in r.alpha.weights() {
            assert_relative_eq!(a, 0.25, epsilon = 1e-15);
        }

        let pop = PopulationSpec::new(vec![0.2, 0.8]).unwrap();
        let r = optimal_allocation_closed_form(&pop, &[0.0, 0.0], 1.0).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.alpha.weights(), pop.gamma());

        let r = optimal_allocation_closed_form(&pop, &[0.0, 2.0], 1.0).unwrap();
        assert!(!r.degenerate);
        assert_eq!(r.alpha.weights(), &[0.0, 1.0]);
        assert!(optimal_allocation_closed_form(&pop, &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn water_filling_matches_closed_form_and_symmetry() {
        let pop = PopulationSpec::new(vec![0.5, 0.5]).unwrap();
        let m = model(&[(1.0, 1.0, 0.0, 1.0, 0.0), (1.0, 1.0, 0.0, 1.0, 0.0)]);
        for n in [2.0, 100.0, 1e6] {
            let r = optimal_allocation_general(&m, &pop, n).unwrap();
            assert_relative_eq!(r.alpha.weights()[0], 0.5, epsilon = 1e-10);
        }
        let pop = PopulationSpec::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let sig = [3.0, 0.5, 1.0, 2.0];
        let m = model(
            &sig.iter()
                .map(|&s| (s, 0.6, 0.1, 0.5, 0.01))
                .collect::<Vec<_>>(),
        );
        let a = optimal_allocation_general(&m, &pop, 1234.0).unwrap();
        let b = optimal_allocation_closed_form(&pop, &sig, 0.6).unwrap();
        for g in 0..4 {
            assert!((a.alpha.weights()[g] - b.alpha.weights()[g]).abs() < 1e-9);
        }
    }

    #[test]
    fn water_filling_zero_sigma_groups() {
        let pop = PopulationSpec::new(vec![0.3, 0.7]).unwrap();
        let m = model(&[(0.0, 1.0, 0.1, 1.0, 0.1), (1.0, 0.5, 0.0, 1.0, 0.0)]);
        let r = optimal_allocation_general(&m, &pop, 100.0).unwrap();
        assert_eq!(r.alpha.weights(), &[0.0, 1.0]);
        let m = model(&[(0.0, 1.0, 0.1, 1.0, 0.1), (0.0, 0.5, 0.0, 1.0, 0.0)]);
        let r = optimal_allocation_general(&m, &pop, 100.0).unwrap();
        assert!(r.degenerate);
    }

    #[test]
    fn minmax_examples() {
        let m = model(&[(4.0, 1.0, 0.0, 1.0, 0.0), (1.0, 1.0, 0.0, 1.0, 0.0)]);
        let r = minmax_allocation(&m, 1000.0).unwrap();
        assert!((r.alpha.weights()[0] - 0.8).abs() < 1e-12);
        assert!((r.objective_value - 0.005).abs() < 1e-12);

        let m = model(&[(2.0, 0.4, 0.1, 0.5, 0.01), (2.0, 0.4, 0.1, 0.5, 0.01)]);
        let r = minmax_allocation(&m, 500.0).unwrap();
        assert!((r.alpha.weights()[0] - 0.5).abs() < 1e-12);

        let m = model(&[(1.0, 1.0, 0.0, 1.0, 100.0), (1.0, 1.0, 0.0, 1.0, 0.0)]);
        let r = minmax_allocation(&m, 1000.0).unwrap();
        assert_eq!(r.alpha.weights()[0], 1.0 - 1.0 / 1000.0);

        let m = model(&[(0.0, 1.0, 0.0, 1.0, 0.1), (0.0, 1.0, 0.0, 1.0, 0.2)]);
        let r = minmax_allocation(&m, 1000.0).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.alpha.weights(), &[0.5, 0.5]);

        let m3 = model(&[(1.0, 1.0, 0.0, 1.0, 0.0); 3]);
        assert!(minmax_allocation(&m3, 100.0).is_err());
    }

    #[test]
    fn corollaries_examples() {
        let pop = PopulationSpec::new(vec![0.1, 0.9]).unwrap();
        let rows = corollary1_check(&pop, 1.0).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].group, GroupId(0));
        assert_relative_eq!(rows[0].alpha_star, 0.25, epsilon = 1e-15);
        assert!(rows[0].holds);

        let pop = PopulationSpec::new(vec![0.25; 4]).unwrap();
        let rows = corollary1_check(&pop, 0.3).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.holds));

        let b = corollary2_bounds(0.1, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(b.lower, 0.1, epsilon = 1e-15);
        assert_relative_eq!(b.upper, 0.5, epsilon = 1e-15);
        assert_relative_eq!(b.alpha_star_a, 0.25, epsilon = 1e-15);
        assert!(b.lower < b.alpha_star_a && b.alpha_star_a < b.upper);

        let b = corollary2_bounds(0.5 - 1e-9, 1.0, 1.0 + 1e-9, 1.0).unwrap();
        assert!((b.lower - 0.5).abs() < 1e-8 && (b.upper - 0.5).abs() < 1e-8);
        assert_eq!(corollary2_bounds(0.5, 1.0, 1.0, 1.0), Err(Error::NotMinority(0.5)));
    }

    proptest! {
        #[test]
        fn closed_form_scale_invariant(
            gamma in proptest::collection::vec(0.01f64..1.0, 2..6),
            sig in proptest::collection::vec(0.01f64..10.0, 6),
            p in 0.05f64..2.0,
            scale in 0.01f64..100.0,
        ) {
            let pop = PopulationSpec::new(normalize(&gamma)).unwrap();
            let s = &sig[..gamma.len()];
            let scaled: Vec<f64> = s.iter().map(|x| x * scale).collect();
            let a = optimal_allocation_closed_form(&pop, s, p).unwrap();
            let b = optimal_allocation_closed_form(&pop, &scaled, p).unwrap();
            for (x, y) in a.alpha.weights().iter().zip(b.alpha.weights()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn closed_form_monotone_in_sigma(
            gamma in proptest::collection::vec(0.01f64..1.0, 2..6),
            sig in proptest::collection::vec(0.01f64..10.0, 6),
            p in 0.05f64..2.0,
            bump in 1.0f64..5.0,
        ) {
            let pop = PopulationSpec::new(normalize(&gamma)).unwrap();
            let s = sig[..gamma.len()].to_vec();
            let mut t = s.clone();
            t[0] *= bump;
            let a = optimal_allocation_closed_form(&pop, &s, p).unwrap();
            let b = optimal_allocation_closed_form(&pop, &t, p).unwrap();
            prop_assert!(b.alpha.weights()[0] >= a.alpha.weights()[0] - 1e-15);
        }

        #[test]
        fn forecast_strictly_decreasing(
            s in 0.01f64..10.0, p in 0.01f64..2.0, t in 0.01f64..10.0, q in 0.01f64..2.0,
            ng in 1.0f64..1e4, extra in 1.0f64..1e4,
        ) {
            let g = GroupScaling::new(s, p, t, q, 0.1, 1).unwrap();
            let n = ng + extra;
            prop_assert!(g.risk(ng * 1.5, n * 1.5) < g.risk(ng, n * 1.5));
            prop_assert!(g.risk(ng, n * 2.0) < g.risk(ng, n));
        }

        #[test]
        fn minmax_locally_optimal(
            sa in 0.01f64..10.0, sb in 0.01f64..10.0,
            pa in 0.1f64..2.0, pb in 0.1f64..2.0,
            da in 0.0f64..0.05, db in 0.0f64..0.05,
            n in 100.0f64..1e5,
        ) {
            let m = model(&[(sa, pa, 0.1, 0.5, da), (sb, pb, 0.2, 0.4, db)]);
            let r = minmax_allocation(&m, n).unwrap();
            let a = r.alpha.weights()[0];
            let best = max_group_forecast(&m, a, n);
            for step in [-1e-4, 1e-4] {
                let b = a + step;
                if b >= 1.0 / n && b <= 1.0 - 1.0 / n {
                    prop_assert!(max_group_forecast(&m, b, n) >= best);
                }
            }
            if a > 1.0 / n && a < 1.0 - 1.0 / n {
                let la = m.per_group[0].risk(a * n, n);
                let lb = m.per_group[1].risk((1.0 - a) * n, n);
                prop_assert!((la - lb).abs() <= 1e-8 * la.max(lb));
            }
        }
    }

    fn normalize(v: &[f64]) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    }
}
