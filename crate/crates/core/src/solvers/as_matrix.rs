use crate::error::{Error, Result};
use crate::spectral::{prox_trace, singular_values};
use crate::tensor::{observe, ObservationSet};

use super::duality::{dual_feasible_as_matrix, dual_objective};
use super::{
    is_gap_iteration, primal_step, GapTracker, Method, Multipliers, Problem, Solution,
    SolverConfig,
};

/// Completes `obs` by penalizing the trace norm of the mode-`mode` unfolding
/// (0-based) only.
pub fn solve_as_matrix(obs: &ObservationSet, mode: usize, cfg: &SolverConfig) -> Result<Solution> {
    let prob = Problem::new(obs, cfg)?;
    if mode >= prob.order() {
        return Err(Error::ModeOutOfRange { mode, order: prob.order() });
    }
    let n = prob.len();
    let y = prob.y();
    let lambda = cfg.lambda;
    let eta = primal_step(y, cfg.eta0);
    let le = lambda * eta;

    // observed values scattered to tensor layout
    let mut y_full = vec![0.0; n];
    for (&i, &v) in obs.indices().iter().zip(y) {
        y_full[i] = v;
    }

    let mut x = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut alpha = vec![0.0; n];
    let mut tracker = GapTracker::new(cfg.tol);
    let mut converged = false;
    let mut iter = 0;

    while iter < cfg.max_iter {
        iter += 1;

        for i in 0..n {
            let pred = z[i] - alpha[i];
            x[i] = if !prob.observed[i] {
                pred
            } else if lambda > 0.0 {
                (y_full[i] + le * pred) / (1.0 + le)
            } else {
                y_full[i]
            };
        }

        let v: Vec<f64> = x.iter().zip(&alpha).map(|(a, b)| a + b).collect();
        let zk = prox_trace(&prob.unfolder.unfold(&v, mode), 1.0 / eta)?;
        prob.unfolder.fold_into(&zk, mode, &mut z);

        for i in 0..n {
            alpha[i] += x[i] - z[i];
        }

        if is_gap_iteration(iter, cfg) {
            let xt = prob.tensor(x.clone());
            let r2: f64 = observe(&xt, obs)?.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
            let norm: f64 = singular_values(&prob.unfolder.unfold(&x, mode))?.iter().sum();
            let primal = prob.loss(r2, lambda) + norm;

            let scaled = prob.tensor(alpha.iter().map(|a| eta * a).collect());
            let feasible = dual_feasible_as_matrix(&scaled, obs, mode)?;
            let dual = dual_objective(&observe(&feasible.alpha, obs)?, y, lambda);

            if tracker.push(iter, primal, dual) {
                converged = true;
                break;
            }
        }
    }

    Ok(Solution {
        method: Method::AsMatrix { mode },
        components: vec![prob.unfolder.unfold(&z, mode)],
        modes: vec![mode],
        multipliers: Multipliers::Unfolded(vec![prob.unfolder.unfold(&alpha, mode)]),
        x_hat: prob.tensor(x),
        eta,
        diagnostics: tracker.finish(iter, converged),
    })
}
