//! ADMM solvers for the three trace-norm completion formulations.
//!
//! * [`solve_as_matrix`]: trace norm of a single mode-k unfolding.
//! * [`solve_constraint`]: weighted sum of the trace norms of every unfolding
//!   of one tensor (overlapped trace norm).
//! * [`solve_mixture`]: the prediction is a sum of K tensors, the k-th one
//!   penalized only through its mode-k unfolding (latent trace norm). Solved
//!   through its dual.
//!
//! Every solver stops on the relative duality gap `(p - max d) / p < tol`,
//! where the dual value comes from projecting the current multipliers onto the
//! dual feasible set (see [`duality`]). `lambda = 0` means noiseless
//! observations: the loss becomes the indicator of `Omega(x) = y`.

mod as_matrix;
mod constraint;
pub mod duality;
mod mixture;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensor::{DenseTensor, ObservationSet, Unfolder};

pub use as_matrix::solve_as_matrix;
pub use constraint::solve_constraint;
pub use duality::{
    dual_feasible_as_matrix, dual_feasible_constraint, dual_feasible_mixture, dual_objective,
    primal_objective, relative_gap, DualPoint, PrimalPoint,
};
pub use mixture::solve_mixture;

/// Relative residual below which `Omega(x) = y` counts as satisfied when
/// `lambda = 0`.
pub const INTERPOLATION_TOL: f64 = 1e-9;

/// Standard deviations below this fall back to the unscaled step size.
pub const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Noise variance; 0 enforces exact interpolation of the observations.
    pub lambda: f64,
    /// Per-mode trace-norm weights; `None` means all ones.
    pub gammas: Option<Vec<f64>>,
    /// Step-size constant; the actual step is scaled by the spread of `y`.
    pub eta0: f64,
    /// Relative duality gap at which the solver stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations between duality-gap evaluations.
    pub gap_interval: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { lambda: 0.0, gammas: None, eta0: 0.1, tol: 1e-3, max_iter: 2000, gap_interval: 1 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and nonnegative");
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad("eta0 must be positive");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol must lie in (0, 1)");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if self.gap_interval == 0 {
            return bad("gap_interval must be at least 1");
        }
        if let Some(g) = &self.gammas {
            if g.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return bad("every gamma must be positive");
            }
        }
        Ok(())
    }

    /// Mode weights for a K-way problem.
    pub fn gammas_for(&self, order: usize) -> Result<Vec<f64>> {
        match &self.gammas {
            None => Ok(vec![1.0; order]),
            Some(g) if g.len() == order => Ok(g.clone()),
            Some(g) => Err(Error::InvalidConfig(format!(
                "{} gammas given for a {order}-way tensor",
                g.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Trace norm of the unfolding along `mode` (0-based).
    AsMatrix { mode: usize },
    Constraint,
    Mixture,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::AsMatrix { mode } => format!("matrix{}", mode + 1),
            Method::Constraint => "constraint".into(),
            Method::Mixture => "mixture".into(),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    /// Accepts `constraint`, `mixture`, `matrix1`, `matrix:2`, ... (1-based modes).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constraint" => Ok(Method::Constraint),
            "mixture" => Ok(Method::Mixture),
            _ => {
                let rest = s
                    .strip_prefix("matrix")
                    .map(|r| r.trim_start_matches(':'))
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))?;
                let mode: usize = rest
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad mode in method '{s}'")))?;
                if mode == 0 {
                    return Err(Error::InvalidArgument("modes are 1-based".into()));
                }
                Ok(Method::AsMatrix { mode: mode - 1 })
            }
        }
    }
}

/// Run `method` on `obs`.
pub fn solve(method: Method, obs: &ObservationSet, cfg: &SolverConfig) -> Result<Solution> {
    match method {
        Method::AsMatrix { mode } => solve_as_matrix(obs, mode, cfg),
        Method::Constraint => solve_constraint(obs, cfg),
        Method::Mixture => solve_mixture(obs, cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
}

/// One duality-gap evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    /// 1-based iteration count at which the record was taken.
    pub iteration: usize,
    /// `None` when the noiseless loss is not yet satisfied.
    pub primal: Option<f64>,
    pub dual: f64,
    pub best_dual: f64,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub records: Vec<GapRecord>,
    pub iterations: usize,
    pub termination: Termination,
}

impl Diagnostics {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.gap)
    }
}

/// Native multiplier variables of each solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Multipliers {
    /// Per-component multipliers in unfolding form, scaled by `1/eta` as in
    /// the augmented Lagrangian (the Lagrange multiplier is `eta * alpha`).
    Unfolded(Vec<Matrix>),
    /// Dual vector over the observations (mixture).
    Observed(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub method: Method,
    /// Recovered tensor; for the mixture, the sum of the folded components.
    pub x_hat: DenseTensor,
    /// Auxiliary matrices, each in the unfolding shape of its mode.
    pub components: Vec<Matrix>,
    /// Mode of each entry of `components`.
    pub modes: Vec<usize>,
    pub multipliers: Multipliers,
    /// Step size actually used.
    pub eta: f64,
    pub diagnostics: Diagnostics,
}

/// Sample standard deviation (denominator `M - 1`); zero for fewer than two values.
pub fn sample_std(y: &[f64]) -> f64 {
    let m = y.len();
    if m < 2 {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / m as f64;
    let ss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (m - 1) as f64).sqrt()
}

/// Step size `eta0 / std(y)` for the primal solvers.
pub fn primal_step(y: &[f64], eta0: f64) -> f64 {
    let s = sample_std(y);
    if s < DEGENERATE_STD {
        eta0
    } else {
        eta0 / s
    }
}

/// Step size `std(y) / eta0` for the dual (mixture) solver.
pub fn dual_step(y: &[f64], eta0: f64) -> f64 {
    let s = sample_std(y);
    if s < DEGENERATE_STD {
        1.0 / eta0
    } else {
        s / eta0
    }
}

/// Data shared by the three solvers.
pub(crate) struct Problem<'a> {
    pub obs: &'a ObservationSet,
    pub shape: Vec<usize>,
    pub unfolder: Unfolder,
    pub observed: Vec<bool>,
    pub y_norm: f64,
}

impl<'a> Problem<'a> {
    pub fn new(obs: &'a ObservationSet, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if obs.is_empty() {
            return Err(Error::InvalidObservations("no observed entries".into()));
        }
        let shape = obs.shape().to_vec();
        Ok(Self {
            obs,
            unfolder: Unfolder::new(&shape)?,
            observed: obs.mask(),
            y_norm: obs.values().iter().map(|v| v * v).sum::<f64>().sqrt(),
            shape,
        })
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn y(&self) -> &[f64] {
        self.obs.values()
    }

    /// Loss at the observed residual `r = Omega(x) - y`: `||r||^2 / (2 lambda)`,
    /// or the interpolation indicator when `lambda = 0`.
    pub fn loss(&self, residual_sq: f64, lambda: f64) -> f64 {
        if lambda > 0.0 {
            residual_sq / (2.0 * lambda)
        } else if residual_sq.sqrt() <= INTERPOLATION_TOL * self.y_norm {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn tensor(&self, values: Vec<f64>) -> DenseTensor {
        DenseTensor::from_raw(self.shape.clone(), values)
    }
}

/// Running duality-gap bookkeeping shared by the solvers.
pub(crate) struct GapTracker {
    records: Vec<GapRecord>,
    best_dual: f64,
    tol: f64,
}

impl GapTracker {
    pub fn new(tol: f64) -> Self {
        Self { records: Vec::new(), best_dual: f64::NEG_INFINITY, tol }
    }

    /// Records one evaluation and reports whether the stopping rule holds.
    pub fn push(&mut self, iteration: usize, primal: f64, dual: f64) -> bool {
        if dual > self.best_dual {
            self.best_dual = dual;
        }
        let primal = primal.is_finite().then_some(primal);
        let gap = primal.and_then(|p| relative_gap(p, self.best_dual));
        log::trace!("iter {iteration}: primal {primal:?} dual {dual} gap {gap:?}");
        self.records.push(GapRecord { iteration, primal, dual, best_dual: self.best_dual, gap });
        gap.is_some_and(|g| g < self.tol)
    }

    pub fn finish(self, iterations: usize, converged: bool) -> Diagnostics {
        Diagnostics {
            records: self.records,
            iterations,
            termination: if converged { Termination::Converged } else { Termination::MaxIter },
        }
    }
}

pub(crate) fn is_gap_iteration(iter: usize, cfg: &SolverConfig) -> bool {
    iter % cfg.gap_interval == 0 || iter == cfg.max_iter
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = [
            SolverConfig { lambda: -1.0, ..Default::default() },
            SolverConfig { eta0: 0.0, ..Default::default() },
            SolverConfig { tol: 1.0, ..Default::default() },
            SolverConfig { max_iter: 0, ..Default::default() },
            SolverConfig { gap_interval: 0, ..Default::default() },
            SolverConfig { gammas: Some(vec![1.0, 0.0]), ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))), "{cfg:?}");
        }
        let g = SolverConfig { gammas: Some(vec![1.0, 2.0]), ..Default::default() };
        assert!(g.gammas_for(3).is_err());
        assert_eq!(SolverConfig::default().gammas_for(3).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("constraint".parse::<Method>().unwrap(), Method::Constraint);
        assert_eq!("matrix3".parse::<Method>().unwrap(), Method::AsMatrix { mode: 2 });
        assert_eq!("matrix:1".parse::<Method>().unwrap(), Method::AsMatrix { mode: 0 });
        assert!("matrix0".parse::<Method>().is_err());
        assert!("tucker".parse::<Method>().is_err());
        assert_eq!(Method::AsMatrix { mode: 1 }.label(), "matrix2");
    }

    #[test]
    fn step_sizes() {
        let y = [1.0, 3.0];
        let s = 2f64.sqrt();
        assert!((sample_std(&y) - s).abs() < 1e-15);
        assert!((primal_step(&y, 0.1) - 0.1 / s).abs() < 1e-15);
        assert!((dual_step(&y, 0.1) - s / 0.1).abs() < 1e-12);
        assert_eq!(primal_step(&[2.0, 2.0], 0.1), 0.1);
        assert_eq!(dual_step(&[5.0], 0.1), 10.0);
    }

    #[test]
    fn tracker_stops_on_small_gap() {
        let mut t = GapTracker::new(1e-3);
        assert!(!t.push(1, 1.0, 0.5));
        assert!(!t.push(2, f64::INFINITY, 0.9));
        assert!(t.push(3, 0.9005, 0.3));
        let d = t.finish(3, true);
        assert_eq!(d.records[2].best_dual, 0.9);
        assert!(d.records[1].gap.is_none());
        assert!(d.converged());
    }
}
