//! Levenberg–Marquardt for small dense least-squares problems.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOptions {
    pub max_iterations: usize,
    /// Stop when a successful step improves the SSE by less than this fraction.
    pub rel_tol: f64,
    /// Stop when the SSE drops below this absolute level.
    pub abs_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            rel_tol: 1e-15,
            abs_tol: 1e-30,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub x: DVector<f64>,
}

/// Minimizes `|r(x)|^2` where `eval(x)` returns the residual vector and its
/// Jacobian. Damping uses Marquardt's diagonal scaling.
pub(crate) fn minimize<F>(x0: DVector<f64>, eval: F, opts: LmOptions) -> LmOutcome
where
    F: Fn(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
{
    let mut x = x0;
    let (mut r, mut j) = eval(&x);
    let mut sse = finite_sse(&r);
    let mut lambda = 1e-3;
    let mut stalls = 0;
    let mut iterations = 0;
    while iterations < opts.max_iterations && sse.is_finite() && sse > opts.abs_tol {
        iterations += 1;
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let x_new = &x + &step;
            let (r_new, j_new) = eval(&x_new);
            let sse_new = finite_sse(&r_new);
            if sse_new < sse {
                let improvement = (sse - sse_new) / sse;
                x = x_new;
                r = r_new;
                j = j_new;
                sse = sse_new;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                stalls = if improvement < opts.rel_tol { stalls + 1 } else { 0 };
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted || stalls >= 3 {
            break;
        }
    }
    LmOutcome { x }
}

fn finite_sse(r: &DVector<f64>) -> f64 {
    let s = r.norm_squared();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_exponential_decay() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.0 * (-0.7 * t).exp()).collect();
        let eval = |x: &DVector<f64>| {
            let r = DVector::from_iterator(t.len(), t.iter().zip(&y).map(|(t, y)| x[0] * (-x[1] * t).exp() - y));
            let j = DMatrix::from_fn(t.len(), 2, |i, k| {
                let e = (-x[1] * t[i]).exp();
                if k == 0 {
                    e
                } else {
                    -x[0] * t[i] * e
                }
            });
            (r, j)
        };
        let out = minimize(DVector::from_vec(vec![1.0, 0.1]), eval, LmOptions::default());
        assert!((out.x[0] - 2.0).abs() < 1e-10);
        assert!((out.x[1] - 0.7).abs() < 1e-10);
        assert!(eval(&out.x).0.norm_squared() < 1e-20);
    }
}
