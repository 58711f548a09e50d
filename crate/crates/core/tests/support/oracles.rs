//! Reference computations written independently of the library: direct
//! formulas and brute-force grid searches.

#![allow(dead_code)]

use std::collections::BTreeSet;

/// `sum_g gamma_g sigma2_g alpha_g^-p_g`, the population risk with `n = 1`
/// and no pooled or floor terms. Infinite when a weighted group is empty.
pub fn population_objective(gamma: &[f64], sigma2: &[f64], p: &[f64], alpha: &[f64]) -> f64 {
    let mut total = 0.0;
    for g in 0..gamma.len() {
        let w = gamma[g] * sigma2[g];
        if w == 0.0 {
            continue;
        }
        if alpha[g] <= 0.0 {
            return f64::INFINITY;
        }
        total += w * alpha[g].powf(-p[g]);
    }
    total
}

/// `alpha_g ∝ (gamma_g sigma2_g)^(1/(p+1))`.
pub fn closed_form_alpha(gamma: &[f64], sigma2: &[f64], p: f64) -> Vec<f64> {
    let raw: Vec<f64> = gamma
        .iter()
        .zip(sigma2)
        .map(|(g, s)| (g * s).powf(1.0 / (p + 1.0)))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

/// Visits every point of the simplex grid `{k / steps}` in `groups`
/// dimensions whose coordinates lie within `window` of `center`.
fn visit_grid(groups: usize, steps: u64, center: Option<&[f64]>, window: f64, visit: &mut dyn FnMut(&[f64])) {
    let mut point = vec![0u64; groups];
    fn rec(
        g: usize,
        left: u64,
        point: &mut Vec<u64>,
        steps: u64,
        center: Option<&[f64]>,
        window: f64,
        visit: &mut dyn FnMut(&[f64]),
    ) {
        let groups = point.len();
        let inside = |g: usize, k: u64| match center {
            Some(c) => (k as f64 / steps as f64 - c[g]).abs() <= window + 1e-12,
            None => true,
        };
        if g == groups - 1 {
            if inside(g, left) {
                point[g] = left;
                let alpha: Vec<f64> = point.iter().map(|&k| k as f64 / steps as f64).collect();
                visit(&alpha);
            }
            return;
        }
        for k in 0..=left {
            if !inside(g, k) {
                continue;
            }
            point[g] = k;
            rec(g + 1, left - k, point, steps, center, window, visit);
        }
    }
    rec(0, steps, &mut point, steps, center, window, visit);
}

/// Minimizer of `f` over the simplex grid with spacing `1 / steps`.
pub fn simplex_grid_argmin(groups: usize, steps: u64, f: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut best = (f64::INFINITY, vec![]);
    visit_grid(groups, steps, None, 0.0, &mut |a| {
        let v = f(a);
        if v < best.0 {
            best = (v, a.to_vec());
        }
    });
    best.1
}

/// Grid search refined by factors of ten down to spacing `1 / final_steps`:
/// each level searches a window of two coarse cells around the previous
/// minimizer. Valid for convex objectives.
pub fn refined_grid_argmin(groups: usize, final_steps: u64, f: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut steps = 100u64.min(final_steps);
    let mut best = simplex_grid_argmin(groups, steps, f);
    while steps < final_steps {
        let window = 2.0 / steps as f64;
        steps *= 10;
        let mut level = (f64::INFINITY, best.clone());
        visit_grid(groups, steps, Some(&best), window, &mut |a| {
            let v = f(a);
            if v < level.0 {
                level = (v, a.to_vec());
            }
        });
        best = level.1;
    }
    best
}

/// `sigma2 n_g^-p + tau2 n^-q + delta`.
pub fn scaling_risk(sigma2: f64, p: f64, tau2: f64, q: f64, delta: f64, n_g: f64, n: f64) -> f64 {
    sigma2 * n_g.powf(-p) + tau2 * n.powf(-q) + delta
}

/// Expected group risk of least squares with group intercepts:
/// `sigma^2 (1 + 1/n_g + d/(n - d - 1))`.
pub fn ols_group_risk(sigma2: f64, d: usize, n_g: u64, n: u64) -> f64 {
    sigma2 * (1.0 + 1.0 / n_g as f64 + d as f64 / (n as f64 - d as f64 - 1.0))
}

/// `(E[L], Var[L])` of the weighted estimator.
pub fn estimator_moments(w: &[f64], alpha: &[f64], mean: &[f64], var: &[f64], n: f64) -> (f64, f64) {
    let m = (0..w.len()).map(|g| alpha[g] * w[g] * mean[g]).sum();
    let v = (0..w.len()).map(|g| alpha[g] * w[g] * w[g] * var[g]).sum::<f64>() / n;
    (m, v)
}

/// Two-group subset design enumerated in integer arithmetic: ratios given as
/// `1/denominator`, fractions in thousandths of the pool.
pub fn subset_pairs(pool: u64, ratio_denominators: &[u64], fractions_milli: &[u64], skip_milli: &[u64]) -> BTreeSet<(u64, u64)> {
    let mut pairs = BTreeSet::new();
    for &den in ratio_denominators {
        for &x in fractions_milli {
            if den > 1 && skip_milli.contains(&x) {
                continue;
            }
            let major = pool * x / 1000;
            let minor = major / den;
            if minor == 0 {
                continue;
            }
            pairs.insert((major, minor));
            pairs.insert((minor, major));
        }
    }
    pairs
}
