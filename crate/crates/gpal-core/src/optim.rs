//! Derivative-free simplex minimization (Nelder-Mead) with box projection.
//!
//! Hyperparameter fitting runs this over log-transformed parameters, so the
//! box keeps every variance positive without explicit constraints. The
//! routine is fully deterministic: no random restarts happen in here.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_evals: usize,
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            f_tol: 1e-10,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for d in 0..x.len() {
        x[d] = x[d].clamp(lo[d], hi[d]);
    }
}

/// Minimize `f` from `x0` inside the box `[lo, hi]`. The objective may
/// return `INFINITY` for infeasible points; those vertices are simply
/// ranked worst.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    let n = x0.len();
    assert!(n > 0 && lo.len() == n && hi.len() == n);
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // initial simplex: nudge each coordinate by 5% of its box width,
    // flipping direction when that would leave the box
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp_into(&mut start, lo, hi);
    simplex.push(start.clone());
    for d in 0..n {
        let mut v = start.clone();
        let step = 0.05 * (hi[d] - lo[d]);
        v[d] = if v[d] + step <= hi[d] {
            v[d] + step
        } else {
            v[d] - step
        };
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let mut converged = false;
    while evals < opts.max_evals {
        // order ascending by objective
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap_or(core::cmp::Ordering::Equal));
        let reorder: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let refv: Vec<f64> = order.iter().map(|&i| fv[i]).collect();
        simplex = reorder;
        fv = refv;

        let spread = fv[n] - fv[0];
        let width = (0..n)
            .map(|d| {
                let lo_d = simplex.iter().map(|v| v[d]).fold(f64::INFINITY, f64::min);
                let hi_d = simplex.iter().map(|v| v[d]).fold(f64::NEG_INFINITY, f64::max);
                hi_d - lo_d
            })
            .fold(0.0f64, f64::max);
        if spread.abs() <= opts.f_tol * (1.0 + fv[0].abs()) && width <= opts.x_tol {
            converged = true;
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for v in simplex.iter().take(n) {
            for d in 0..n {
                centroid[d] += v[d] / n as f64;
            }
        }

        let project = |scale: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..n)
                .map(|d| centroid[d] + scale * (centroid[d] - simplex[n][d]))
                .collect();
            clamp_into(&mut x, lo, hi);
            x
        };

        let reflected = project(alpha);
        let fr = eval(&reflected, &mut evals);
        if fr < fv[0] {
            let expanded = project(gamma);
            let fe = eval(&expanded, &mut evals);
            if fe < fr {
                simplex[n] = expanded;
                fv[n] = fe;
            } else {
                simplex[n] = reflected;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            simplex[n] = reflected;
            fv[n] = fr;
        } else {
            let contracted = if fr < fv[n] { project(rho) } else { project(-rho) };
            let fc = eval(&contracted, &mut evals);
            if fc < fv[n].min(fr) {
                simplex[n] = contracted;
                fv[n] = fc;
            } else {
                // shrink toward the best vertex
                for i in 1..=n {
                    for d in 0..n {
                        simplex[i][d] = simplex[0][d] + sigma * (simplex[i][d] - simplex[0][d]);
                    }
                    let v = simplex[i].clone();
                    fv[i] = eval(&v, &mut evals);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if fv[i] < fv[best] {
            best = i;
        }
    }
    SimplexResult {
        x: simplex[best].clone(),
        f: fv[best],
        evals,
        converged,
    }
}
