//! Two-coordinate dual solver for the C-SVM with second-order working-set
//! selection.
//!
//! Minimizes `0.5 a'Qa - e'a` subject to `0 <= a_i <= C` and `y'a = 0`, where
//! `Q_ij = y_i y_j K(x_i, x_j)`. Stops when the largest KKT gap between the
//! "up" and "low" index sets falls below `eps`.

use super::kernel::{KernelCache, SparseVec};

const TAU: f64 = 1e-12;

pub(crate) struct SolverConfig {
    pub eps: f64,
    pub max_iter: u64,
    pub cache_bytes: usize,
}

pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: u64,
    pub converged: bool,
}

pub(crate) fn solve(x: &[SparseVec], y: &[f64], c: f64, gamma: f64, cfg: &SolverConfig) -> Solution {
    let n = x.len();
    let mut cache = KernelCache::new(x, gamma, cfg.cache_bytes);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    // Contribution of multipliers at the upper bound to the gradient, kept
    // so that gradients of shrunk indices can be rebuilt from free vectors.
    let mut grad_bar = vec![0.0; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut unshrunk = false;
    let shrink_every = n.clamp(1, 1000);
    let mut countdown = shrink_every;
    let mut iterations = 0;
    let mut converged = false;

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    loop {
        // i: the most violating index in the "up" set.
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for &t in &active {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
        }
        // j: the "low" index giving the largest decrease of the objective
        // along the pair direction, using K_ii = K_jj = 1.
        let ki = if i == usize::MAX { None } else { Some(cache.row(i)) };
        let mut gmin = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for &t in &active {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if let (true, Some(ki)) = (b > 0.0, &ki) {
                let quad = (2.0 - 2.0 * ki[t]).max(TAU);
                let obj = -(b * b) / quad;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.eps {
            if active.len() == n {
                converged = true;
                break;
            }
            // Optimal on the active set: restore everything and check again.
            reconstruct_gradient(&mut cache, &alpha, y, c, &grad_bar, &active, &mut grad);
            active = (0..n).collect();
            countdown = 1;
            continue;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        countdown -= 1;
        if countdown == 0 {
            countdown = shrink_every;
            if !unshrunk && gmax - gmin <= 10.0 * cfg.eps {
                unshrunk = true;
                reconstruct_gradient(&mut cache, &alpha, y, c, &grad_bar, &active, &mut grad);
                active = (0..n).collect();
            }
            // Bound multipliers whose gradient points firmly away from the
            // violating range are unlikely to move again.
            active.retain(|&t| {
                let v = -y[t] * grad[t];
                let (up, low) = (in_up(alpha[t], y[t]), in_low(alpha[t], y[t]));
                !((up && !low && v < gmin) || (low && !up && v > gmax))
            });
        }

        let ki = ki.expect("row of the selected index");
        let kj = cache.row(j);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let (ai, aj) = pair_update(old_ai, old_aj, y[i], y[j], grad[i], grad[j], ki[i], kj[j], ki[j], c);
        alpha[i] = ai;
        alpha[j] = aj;

        let di = (ai - old_ai) * y[i];
        let dj = (aj - old_aj) * y[j];
        for &t in &active {
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
        for (k, row, old, new) in [(i, &ki, old_ai, ai), (j, &kj, old_aj, aj)] {
            let (was, is) = (old >= c, new >= c);
            if was != is {
                let s = if is { c * y[k] } else { -c * y[k] };
                for t in 0..n {
                    grad_bar[t] += s * y[t] * row[t];
                }
            }
        }
    }

    if active.len() < n {
        reconstruct_gradient(&mut cache, &alpha, y, c, &grad_bar, &active, &mut grad);
    }
    let rho = compute_rho(&alpha, y, &grad, c);
    Solution { alpha, rho, iterations, converged }
}

/// Recomputes the gradient of every index outside `active` from the
/// upper-bound term and the free multipliers.
fn reconstruct_gradient(
    cache: &mut KernelCache,
    alpha: &[f64],
    y: &[f64],
    c: f64,
    grad_bar: &[f64],
    active: &[usize],
    grad: &mut [f64],
) {
    let n = alpha.len();
    let mut is_active = vec![false; n];
    for &t in active {
        is_active[t] = true;
    }
    let inactive: Vec<usize> = (0..n).filter(|&t| !is_active[t]).collect();
    if inactive.is_empty() {
        return;
    }
    for &t in &inactive {
        grad[t] = grad_bar[t] - 1.0;
    }
    for s in 0..n {
        if alpha[s] > 0.0 && alpha[s] < c {
            let row = cache.row(s);
            let w = alpha[s] * y[s];
            for &t in &inactive {
                grad[t] += y[t] * w * row[t];
            }
        }
    }
}

/// Analytic optimum of the two-variable subproblem, clipped to the box.
#[allow(clippy::too_many_arguments)]
fn pair_update(
    ai: f64,
    aj: f64,
    yi: f64,
    yj: f64,
    gi: f64,
    gj: f64,
    kii: f64,
    kjj: f64,
    kij: f64,
    c: f64,
) -> (f64, f64) {
    let (mut ai, mut aj) = (ai, aj);
    if yi != yj {
        let mut quad = kii + kjj - 2.0 * kij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (-gi - gj) / quad;
        let diff = ai - aj;
        ai += delta;
        aj += delta;
        if diff > 0.0 {
            if aj < 0.0 {
                aj = 0.0;
                ai = diff;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = -diff;
        }
        if diff > 0.0 {
            if ai > c {
                ai = c;
                aj = c - diff;
            }
        } else if aj > c {
            aj = c;
            ai = c + diff;
        }
    } else {
        let mut quad = kii + kjj - 2.0 * kij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (gi - gj) / quad;
        let sum = ai + aj;
        ai -= delta;
        aj += delta;
        if sum > c {
            if ai > c {
                ai = c;
                aj = sum - c;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > c {
            if aj > c {
                aj = c;
                ai = sum - c;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
    }
    (ai, aj)
}

/// Offset `rho` such that `f(x) = sum a_i y_i K(x_i, x) - rho`: the mean of
/// `y_i G_i` over free vectors, or the midpoint of the feasible interval.
fn compute_rho(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}
