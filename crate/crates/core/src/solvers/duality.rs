//! Primal objectives, dual objectives and the projections that turn ADMM
//! multipliers into dual feasible points.
//!
//! Multipliers are handled in tensor layout (`P_k^T alpha_k`), which is
//! equivalent to the unfolding layout up to the fixed permutation.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectral::{spectral_norm, trace_norm};
use crate::tensor::{fold, observe, scatter, unfold, DenseTensor, ObservationSet};

use super::{Method, SolverConfig, INTERPOLATION_TOL};

/// A point at which to evaluate a primal objective.
#[derive(Debug, Clone, Copy)]
pub enum PrimalPoint<'a> {
    /// The tensor `x` and its auxiliary matrices: one for the as-a-matrix
    /// method, one per mode for the constraint method.
    Joint { x: &'a DenseTensor, components: &'a [Matrix] },
    /// Mixture components `Z_1..Z_K`, one per mode in order.
    Mixture { components: &'a [Matrix] },
}

/// A dual feasible point together with the shrinkage factor that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint<T> {
    pub alpha: T,
    pub shrink: f64,
}

fn noise_loss(residual: &[f64], y: &[f64], lambda: f64) -> f64 {
    let r2: f64 = residual.iter().map(|v| v * v).sum();
    if lambda > 0.0 {
        r2 / (2.0 * lambda)
    } else {
        let y2: f64 = y.iter().map(|v| v * v).sum();
        if r2.sqrt() <= INTERPOLATION_TOL * y2.sqrt() {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn component_modes(method: Method, count: usize, order: usize) -> Result<Vec<usize>> {
    let modes: Vec<usize> = match method {
        Method::AsMatrix { mode } => vec![mode],
        Method::Constraint | Method::Mixture => (0..order).collect(),
    };
    if modes.len() != count {
        return Err(Error::DimensionMismatch(format!(
            "{} expects {} components, got {count}",
            method.label(),
            modes.len()
        )));
    }
    Ok(modes)
}

/// Objective value of `method` at `point`. Returns `+inf` when `lambda = 0`
/// and the observations are not interpolated.
pub fn primal_objective(
    method: Method,
    point: PrimalPoint<'_>,
    obs: &ObservationSet,
    cfg: &SolverConfig,
) -> Result<f64> {
    let order = obs.shape().len();
    let (prediction, components) = match point {
        PrimalPoint::Joint { x, components } => {
            if matches!(method, Method::Mixture) {
                return Err(Error::InvalidArgument("mixture objective needs components".into()));
            }
            (x.clone(), components)
        }
        PrimalPoint::Mixture { components } => {
            if !matches!(method, Method::Mixture) {
                return Err(Error::InvalidArgument(format!(
                    "{} objective needs the tensor x",
                    method.label()
                )));
            }
            let modes = component_modes(method, components.len(), order)?;
            let mut acc = vec![0.0; obs.shape().iter().product()];
            for (z, &k) in components.iter().zip(&modes) {
                let t = fold(z, k, obs.shape())?;
                acc.iter_mut().zip(t.values()).for_each(|(a, v)| *a += v);
            }
            (DenseTensor::new(obs.shape().to_vec(), acc)?, components)
        }
    };
    let modes = component_modes(method, components.len(), order)?;
    let gammas = match method {
        Method::AsMatrix { .. } => vec![1.0],
        _ => cfg.gammas_for(order)?,
    };
    let residual: Vec<f64> = observe(&prediction, obs)?
        .iter()
        .zip(obs.values())
        .map(|(p, y)| p - y)
        .collect();
    let mut value = noise_loss(&residual, obs.values(), cfg.lambda);
    for ((z, &k), g) in components.iter().zip(&modes).zip(&gammas) {
        let expected = (obs.shape()[k], prediction.len() / obs.shape()[k]);
        if z.shape() != expected {
            return Err(Error::DimensionMismatch(format!(
                "component for mode {k} is {:?}, expected {expected:?}",
                z.shape()
            )));
        }
        value += g * trace_norm(z)?;
    }
    Ok(value)
}

/// `-lambda/2 ||u||^2 + u^T y`, where `u` is the observed part of the summed
/// feasible multipliers (or the mixture dual vector itself).
pub fn dual_objective(u: &[f64], y: &[f64], lambda: f64) -> f64 {
    let uu: f64 = u.iter().map(|v| v * v).sum();
    let uy: f64 = u.iter().zip(y).map(|(a, b)| a * b).sum();
    -0.5 * lambda * uu + uy
}

/// `(p - d_best) / p`, or `None` when `p` is not a positive finite number.
pub fn relative_gap(primal: f64, best_dual: f64) -> Option<f64> {
    (primal > 0.0 && primal.is_finite()).then(|| (primal - best_dual) / primal)
}

fn shrink_factor(sigmas: &[f64], gammas: &[f64]) -> f64 {
    sigmas
        .iter()
        .zip(gammas)
        .filter(|(s, _)| **s > 0.0)
        .map(|(s, g)| g / s)
        .fold(1.0, f64::min)
}

fn check_shape(t: &DenseTensor, obs: &ObservationSet) -> Result<()> {
    if t.shape() != obs.shape() {
        return Err(Error::DimensionMismatch(format!(
            "multiplier shape {:?} vs problem shape {:?}",
            t.shape(),
            obs.shape()
        )));
    }
    Ok(())
}

/// Zeroes `alpha` off the observed entries, then scales it so the spectral
/// norm of its mode-`mode` unfolding is at most one.
pub fn dual_feasible_as_matrix(
    alpha: &DenseTensor,
    obs: &ObservationSet,
    mode: usize,
) -> Result<DualPoint<DenseTensor>> {
    check_shape(alpha, obs)?;
    let projected = scatter(&observe(alpha, obs)?, obs)?;
    let sigma = spectral_norm(&unfold(&projected, mode)?)?;
    let c = shrink_factor(&[sigma], &[1.0]);
    Ok(DualPoint { alpha: projected.scale(c), shrink: c })
}

/// Removes the mean over modes on every unobserved entry so the multipliers
/// sum to zero there, then scales all of them by
/// `c = min(1, gamma_k / sigma_1(A_k))`.
pub fn dual_feasible_constraint(
    alphas: &[DenseTensor],
    obs: &ObservationSet,
    gammas: &[f64],
) -> Result<DualPoint<Vec<DenseTensor>>> {
    let order = obs.shape().len();
    if alphas.len() != order || gammas.len() != order {
        return Err(Error::DimensionMismatch(format!(
            "{} multipliers and {} gammas for a {order}-way problem",
            alphas.len(),
            gammas.len()
        )));
    }
    for a in alphas {
        check_shape(a, obs)?;
    }
    let observed = obs.mask();
    let n = observed.len();
    let mut mean = vec![0.0; n];
    for a in alphas {
        mean.iter_mut().zip(a.values()).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= order as f64);
    let mut projected = Vec::with_capacity(order);
    let mut sigmas = Vec::with_capacity(order);
    for (k, a) in alphas.iter().enumerate() {
        let vals: Vec<f64> = a
            .values()
            .iter()
            .zip(&mean)
            .zip(&observed)
            .map(|((&v, &m), &o)| if o { v } else { v - m })
            .collect();
        let t = DenseTensor::from_raw(obs.shape().to_vec(), vals);
        sigmas.push(spectral_norm(&unfold(&t, k)?)?);
        projected.push(t);
    }
    let c = shrink_factor(&sigmas, gammas);
    Ok(DualPoint { alpha: projected.iter().map(|t| t.scale(c)).collect(), shrink: c })
}

/// Scales the mixture dual vector by `c = min(1, gamma_k / sigma_1(P_k Omega^T alpha))`.
pub fn dual_feasible_mixture(
    alpha: &[f64],
    obs: &ObservationSet,
    gammas: &[f64],
) -> Result<DualPoint<Vec<f64>>> {
    let order = obs.shape().len();
    if gammas.len() != order {
        return Err(Error::DimensionMismatch(format!(
            "{} gammas for a {order}-way problem",
            gammas.len()
        )));
    }
    let t = scatter(alpha, obs)?;
    let sigmas = (0..order)
        .map(|k| spectral_norm(&unfold(&t, k)?))
        .collect::<Result<Vec<_>>>()?;
    let c = shrink_factor(&sigmas, gammas);
    Ok(DualPoint { alpha: alpha.iter().map(|v| v * c).collect(), shrink: c })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs_2x2x2(idx: &[usize]) -> ObservationSet {
        ObservationSet::from_linear(vec![2, 2, 2], idx.to_vec(), idx.iter().map(|&i| i as f64 + 1.0).collect())
            .unwrap()
    }

    #[test]
    fn relative_gap_values() {
        assert_eq!(relative_gap(2.0, 2.0), Some(0.0));
        assert!((relative_gap(1.0, 0.999).unwrap() - 1e-3).abs() < 1e-15);
        assert_eq!(relative_gap(0.0, -1.0), None);
        assert_eq!(relative_gap(f64::INFINITY, 0.0), None);
    }

    #[test]
    fn zero_state_objective_is_half_inverse_lambda_y_squared() {
        let obs = obs_2x2x2(&[0, 3, 5]);
        let cfg = SolverConfig { lambda: 0.5, ..Default::default() };
        let x = DenseTensor::zeros(vec![2, 2, 2]).unwrap();
        let zs = vec![Matrix::zeros(2, 4); 3];
        let y2: f64 = obs.values().iter().map(|v| v * v).sum();
        let p = primal_objective(Method::Constraint, PrimalPoint::Joint { x: &x, components: &zs }, &obs, &cfg)
            .unwrap();
        assert!((p - y2 / (2.0 * 0.5)).abs() < 1e-12);
        let pm = primal_objective(Method::Mixture, PrimalPoint::Mixture { components: &zs }, &obs, &cfg)
            .unwrap();
        assert!((pm - p).abs() < 1e-12);
    }

    #[test]
    fn noiseless_loss_is_indicator() {
        let obs = obs_2x2x2(&[0, 1]);
        let cfg = SolverConfig::default();
        let x = DenseTensor::zeros(vec![2, 2, 2]).unwrap();
        let z = [unfold(&x, 0).unwrap()];
        let p = primal_objective(Method::AsMatrix { mode: 0 }, PrimalPoint::Joint { x: &x, components: &z }, &obs, &cfg)
            .unwrap();
        assert!(p.is_infinite());
        let fit = scatter(obs.values(), &obs).unwrap();
        let z = [unfold(&fit, 0).unwrap()];
        let p = primal_objective(Method::AsMatrix { mode: 0 }, PrimalPoint::Joint { x: &fit, components: &z }, &obs, &cfg)
            .unwrap();
        assert!((p - crate::spectral::trace_norm(&z[0]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn wrong_component_count_rejected() {
        let obs = obs_2x2x2(&[0]);
        let x = DenseTensor::zeros(vec![2, 2, 2]).unwrap();
        let zs = vec![Matrix::zeros(2, 4); 2];
        let r = primal_objective(Method::Constraint, PrimalPoint::Joint { x: &x, components: &zs }, &obs, &SolverConfig::default());
        assert!(r.is_err());
    }

    #[test]
    fn as_matrix_feasible_alpha_unchanged() {
        let obs = obs_2x2x2(&[0, 7]);
        let alpha = scatter(&[0.5, -0.25], &obs).unwrap();
        let out = dual_feasible_as_matrix(&alpha, &obs, 0).unwrap();
        assert_eq!(out.shrink, 1.0);
        assert_eq!(out.alpha, alpha);
    }

    #[test]
    fn as_matrix_shrinks_to_unit_spectral_norm() {
        // single observed entry of value 5: sigma_1 = 5
        let obs = obs_2x2x2(&[2]);
        let mut vals = vec![0.0; 8];
        vals[2] = 5.0;
        vals[6] = 9.0; // unobserved, must be dropped
        let alpha = DenseTensor::new(vec![2, 2, 2], vals).unwrap();
        let out = dual_feasible_as_matrix(&alpha, &obs, 1).unwrap();
        assert!((out.shrink - 0.2).abs() < 1e-15);
        assert_eq!(out.alpha.values()[6], 0.0);
        let s = spectral_norm(&unfold(&out.alpha, 1).unwrap()).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constraint_shrink_uses_smallest_ratio() {
        // each multiplier concentrated on the observed entry 0 -> sigma_k = |value|
        let obs = obs_2x2x2(&[0]);
        let mk = |v: f64| {
            let mut vals = vec![0.0; 8];
            vals[0] = v;
            DenseTensor::new(vec![2, 2, 2], vals).unwrap()
        };
        let alphas = vec![mk(2.0), mk(0.5), mk(0.5)];
        let out = dual_feasible_constraint(&alphas, &obs, &[1.0; 3]).unwrap();
        assert!((out.shrink - 0.5).abs() < 1e-15);
        let unchanged = vec![mk(0.9), mk(-0.3), mk(0.1)];
        let out = dual_feasible_constraint(&unchanged, &obs, &[1.0; 3]).unwrap();
        assert_eq!(out.shrink, 1.0);
        assert_eq!(out.alpha, unchanged);
    }

    #[test]
    fn shrink_factor_min_formula() {
        assert_eq!(shrink_factor(&[4.0, 2.0, 1.0], &[1.0; 3]), 0.25);
        assert_eq!(shrink_factor(&[2.0, 0.5, 0.5], &[1.0; 3]), 0.5);
        assert_eq!(shrink_factor(&[0.5, 0.0], &[1.0; 2]), 1.0);
    }

    #[test]
    fn mixture_shrink_factor() {
        let obs = obs_2x2x2(&[0]);
        let out = dual_feasible_mixture(&[4.0], &obs, &[1.0, 2.0, 1.0]).unwrap();
        assert!((out.shrink - 0.25).abs() < 1e-15);
        let out = dual_feasible_mixture(&[4.0], &obs, &[4.0, 4.0, 8.0]).unwrap();
        assert_eq!(out.shrink, 1.0);
        assert_eq!(out.alpha, vec![4.0]);
    }

    #[test]
    fn mixture_shrink_with_distinct_mode_norms() {
        // alpha on a 2x2x2 grid chosen so that sigma = (4, 2, 1) is not forced;
        // check c = min over modes of gamma_k / sigma_k directly.
        let obs = ObservationSet::from_linear(vec![2, 2, 2], (0..8).collect(), vec![0.0; 8]).unwrap();
        let alpha: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
        let t = scatter(&alpha, &obs).unwrap();
        let sig: Vec<f64> = (0..3).map(|k| spectral_norm(&unfold(&t, k).unwrap()).unwrap()).collect();
        let gammas = [0.3, 0.2, 0.1];
        let out = dual_feasible_mixture(&alpha, &obs, &gammas).unwrap();
        let expect = (0..3).map(|k| gammas[k] / sig[k]).fold(1.0, f64::min);
        assert!((out.shrink - expect).abs() < 1e-15);
    }
}
