use crate::error::Result;
use crate::spectral::{prox_trace_with_norm, singular_values};
use crate::tensor::ObservationSet;

use super::duality::{dual_feasible_mixture, dual_objective};
use super::{
    dual_step, is_gap_iteration, GapTracker, Method, Multipliers, Problem, Solution, SolverConfig,
};

/// Completes `obs` with a sum of K tensors, the k-th penalized by the trace
/// norm of its mode-k unfolding.
///
/// The iteration runs on the dual: the observation-space vector `alpha` is
/// updated in closed form, and the primal components `z_k` appear as the
/// multipliers of the dual splitting, each updated by a spectral
/// soft-threshold at `gamma_k * eta`.
///
/// With `lambda = 0` the components only interpolate `y` in the limit. The
/// primal value used for the gap, and the returned solution, are those of the
/// interpolating point obtained by adding the observed residual to the
/// component where it costs the least trace norm.
pub fn solve_mixture(obs: &ObservationSet, cfg: &SolverConfig) -> Result<Solution> {
    let prob = Problem::new(obs, cfg)?;
    let order = prob.order();
    let gammas = cfg.gammas_for(order)?;
    let n = prob.len();
    let y = prob.y();
    let idx = obs.indices();
    let lambda = cfg.lambda;
    let eta = dual_step(y, cfg.eta0);
    let denom = lambda + eta * order as f64;

    let mut z = vec![vec![0.0; n]; order];
    // eta * w_k, the scaled auxiliary dual variables
    let mut eta_w = vec![vec![0.0; n]; order];
    let mut alpha = vec![0.0; obs.len()];
    let mut norms = vec![0.0; order];
    let mut tracker = GapTracker::new(cfg.tol);
    let mut converged = false;
    let mut iter = 0;
    let mut v = vec![0.0; n];

    while iter < cfg.max_iter {
        iter += 1;

        for (j, &i) in idx.iter().enumerate() {
            let s: f64 = (0..order).map(|k| z[k][i] - eta_w[k][i]).sum();
            alpha[j] = (y[j] - s) / denom;
        }

        for k in 0..order {
            v.copy_from_slice(&z[k]);
            for (j, &i) in idx.iter().enumerate() {
                v[i] += eta * alpha[j];
            }
            let (zk, nrm) = prox_trace_with_norm(&prob.unfolder.unfold(&v, k), gammas[k] * eta)?;
            prob.unfolder.fold_into(&zk, k, &mut z[k]);
            norms[k] = nrm;
            for i in 0..n {
                eta_w[k][i] = v[i] - z[k][i];
            }
        }

        if is_gap_iteration(iter, cfg) {
            let residual = observed_residual(&z, idx, y);
            let penalty: f64 = gammas.iter().zip(&norms).map(|(g, s)| g * s).sum();
            let primal = if lambda > 0.0 {
                penalty + residual.iter().map(|r| r * r).sum::<f64>() / (2.0 * lambda)
            } else {
                penalty + cheapest_repair(&prob, &residual, &gammas)?.1
            };

            let feasible = dual_feasible_mixture(&alpha, obs, &gammas)?;
            let dual = dual_objective(&feasible.alpha, y, lambda);

            if tracker.push(iter, primal, dual) {
                converged = true;
                break;
            }
        }
    }

    if lambda == 0.0 {
        let residual = observed_residual(&z, idx, y);
        let (k, _) = cheapest_repair(&prob, &residual, &gammas)?;
        for (&i, r) in idx.iter().zip(&residual) {
            z[k][i] += r;
        }
    }

    let mut x = vec![0.0; n];
    for zk in &z {
        x.iter_mut().zip(zk).for_each(|(a, b)| *a += b);
    }
    if lambda == 0.0 {
        for (&i, &v) in idx.iter().zip(y) {
            x[i] = v;
        }
    }

    Ok(Solution {
        method: Method::Mixture,
        components: (0..order).map(|k| prob.unfolder.unfold(&z[k], k)).collect(),
        modes: (0..order).collect(),
        multipliers: Multipliers::Observed(alpha),
        x_hat: prob.tensor(x),
        eta,
        diagnostics: tracker.finish(iter, converged),
    })
}

/// `y - Omega(sum_k z_k)`.
fn observed_residual(z: &[Vec<f64>], idx: &[usize], y: &[f64]) -> Vec<f64> {
    idx.iter()
        .zip(y)
        .map(|(&i, &yv)| yv - z.iter().map(|zk| zk[i]).sum::<f64>())
        .collect()
}

/// Mode whose component absorbs the residual at the smallest weighted trace
/// norm, and that cost.
fn cheapest_repair(prob: &Problem<'_>, residual: &[f64], gammas: &[f64]) -> Result<(usize, f64)> {
    if residual.iter().all(|&r| r == 0.0) {
        return Ok((0, 0.0));
    }
    let mut full = vec![0.0; prob.len()];
    for (&i, &r) in prob.obs.indices().iter().zip(residual) {
        full[i] = r;
    }
    let mut best = (0, f64::INFINITY);
    for (k, g) in gammas.iter().enumerate() {
        let cost = g * singular_values(&prob.unfolder.unfold(&full, k))?.iter().sum::<f64>();
        if cost < best.1 {
            best = (k, cost);
        }
    }
    Ok(best)
}
