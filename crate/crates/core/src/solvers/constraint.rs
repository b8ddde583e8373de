use crate::error::Result;
use crate::spectral::{prox_trace, singular_values};
use crate::tensor::{observe, ObservationSet};

use super::duality::{dual_feasible_constraint, dual_objective};
use super::{
    is_gap_iteration, primal_step, GapTracker, Method, Multipliers, Problem, Solution,
    SolverConfig,
};

/// Completes `obs` by penalizing the weighted sum of the trace norms of all
/// unfoldings of a single tensor.
///
/// With `lambda = 0` the observed entries of `x` are pinned to `y` and the
/// unobserved ones take the average of the K per-mode predictions.
pub fn solve_constraint(obs: &ObservationSet, cfg: &SolverConfig) -> Result<Solution> {
    let prob = Problem::new(obs, cfg)?;
    let order = prob.order();
    let gammas = cfg.gammas_for(order)?;
    let n = prob.len();
    let y = prob.y();
    let lambda = cfg.lambda;
    let eta = primal_step(y, cfg.eta0);
    let le = lambda * eta;
    let kf = order as f64;

    let mut y_full = vec![0.0; n];
    for (&i, &v) in obs.indices().iter().zip(y) {
        y_full[i] = v;
    }

    let mut x = vec![0.0; n];
    let mut z = vec![vec![0.0; n]; order];
    let mut alpha = vec![vec![0.0; n]; order];
    let mut tracker = GapTracker::new(cfg.tol);
    let mut converged = false;
    let mut iter = 0;
    let mut v = vec![0.0; n];

    while iter < cfg.max_iter {
        iter += 1;

        for i in 0..n {
            let pred: f64 = (0..order).map(|k| z[k][i] - alpha[k][i]).sum();
            x[i] = if !prob.observed[i] {
                pred / kf
            } else if lambda > 0.0 {
                (y_full[i] + le * pred) / (1.0 + le * kf)
            } else {
                y_full[i]
            };
        }

        for k in 0..order {
            for i in 0..n {
                v[i] = x[i] + alpha[k][i];
            }
            let zk = prox_trace(&prob.unfolder.unfold(&v, k), gammas[k] / eta)?;
            prob.unfolder.fold_into(&zk, k, &mut z[k]);
            for i in 0..n {
                alpha[k][i] += x[i] - z[k][i];
            }
        }

        if is_gap_iteration(iter, cfg) {
            let xt = prob.tensor(x.clone());
            let r2: f64 = observe(&xt, obs)?.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
            let mut primal = prob.loss(r2, lambda);
            for (k, g) in gammas.iter().enumerate() {
                primal += g * singular_values(&prob.unfolder.unfold(&x, k))?.iter().sum::<f64>();
            }

            let scaled: Vec<_> = alpha
                .iter()
                .map(|a| prob.tensor(a.iter().map(|v| eta * v).collect()))
                .collect();
            let feasible = dual_feasible_constraint(&scaled, obs, &gammas)?;
            let mut u = vec![0.0; obs.len()];
            for a in &feasible.alpha {
                u.iter_mut().zip(observe(a, obs)?).for_each(|(s, v)| *s += v);
            }
            let dual = dual_objective(&u, y, lambda);

            if tracker.push(iter, primal, dual) {
                converged = true;
                break;
            }
        }
    }

    Ok(Solution {
        method: Method::Constraint,
        components: (0..order).map(|k| prob.unfolder.unfold(&z[k], k)).collect(),
        modes: (0..order).collect(),
        multipliers: Multipliers::Unfolded(
            (0..order).map(|k| prob.unfolder.unfold(&alpha[k], k)).collect(),
        ),
        x_hat: prob.tensor(x),
        eta,
        diagnostics: tracker.finish(iter, converged),
    })
}
