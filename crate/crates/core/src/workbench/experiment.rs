//! Single completion experiments, repeated sweeps over observation fractions
//! and rank tuples, and their CSV / JSON renderings.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{solve, Diagnostics, GapRecord, Method, Solution, SolverConfig, Termination};
use crate::tensor::{DenseTensor, ObservationSet};

use super::synth::{gen_lowrank, generalization_error, observe_fraction, sum_of_ranks, SynthSpec};

/// Mean error below which a fraction counts as recovered.
pub const RECOVERY_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub method: String,
    pub fraction: f64,
    pub error: f64,
    /// Seconds spent in the solver.
    pub wall_time: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `obs` with `method` and scores the prediction on the unobserved
/// entries of `x_true`.
pub fn run_experiment(
    x_true: &DenseTensor,
    obs: &ObservationSet,
    method: Method,
    cfg: &SolverConfig,
) -> Result<(ExperimentResult, Solution)> {
    let start = Instant::now();
    let solution = solve(method, obs, cfg)?;
    let wall_time = start.elapsed().as_secs_f64();
    let error = generalization_error(&solution.x_hat, x_true, obs)?;
    let result = ExperimentResult {
        method: method.label(),
        fraction: obs.len() as f64 / x_true.len() as f64,
        error,
        wall_time,
        iterations: solution.diagnostics.iterations,
        converged: solution.diagnostics.converged(),
    };
    Ok((result, solution))
}

/// Deterministic seed for one sweep cell (SplitMix64 finalizer over the parts).
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base;
    for &p in parts {
        h ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub shape: Vec<usize>,
    pub rank_tuples: Vec<Vec<usize>>,
    pub methods: Vec<Method>,
    /// Observation fractions, scanned in increasing order.
    pub fractions: Vec<f64>,
    /// Repetitions per cell, each with a fresh tensor and mask.
    pub nrep: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    /// Skip the remaining fractions of a (method, ranks) series once its
    /// mean error falls below [`RECOVERY_THRESHOLD`].
    pub stop_at_threshold: bool,
}

impl SweepConfig {
    pub fn new(shape: Vec<usize>, rank_tuples: Vec<Vec<usize>>, methods: Vec<Method>, fractions: Vec<f64>) -> Self {
        Self {
            shape,
            rank_tuples,
            methods,
            fractions,
            nrep: 5,
            seed: 0,
            solver: SolverConfig::default(),
            stop_at_threshold: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() || self.rank_tuples.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidArgument("sweep grid is empty".into()));
        }
        if self.nrep == 0 {
            return Err(Error::InvalidArgument("nrep must be positive".into()));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::InvalidArgument(format!("fraction {f} outside (0, 1]")));
        }
        for r in &self.rank_tuples {
            SynthSpec::new(self.shape.clone(), r.clone(), 0)?;
        }
        self.solver.validate()
    }
}

/// Aggregate over the repetitions of one (method, ranks, fraction) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub ranks: Vec<usize>,
    pub sum_of_ranks: usize,
    pub fraction: f64,
    pub mean_error: f64,
    pub sd_error: f64,
    pub mean_time: f64,
    pub mean_iterations: f64,
    pub converged: usize,
    pub nrep: usize,
    /// Smallest fraction of this (method, ranks) series with mean error
    /// below [`RECOVERY_THRESHOLD`], if any.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Every individual run, with the diagnostics of its solve.
    pub runs: Vec<(ExperimentResult, Diagnostics)>,
}

impl SweepOutcome {
    /// Threshold of each (method, ranks) series, in sweep order.
    pub fn thresholds(&self) -> Vec<(String, Vec<usize>, Option<f64>)> {
        let mut out: Vec<(String, Vec<usize>, Option<f64>)> = Vec::new();
        for r in &self.rows {
            if !out.iter().any(|(m, k, _)| *m == r.method && *k == r.ranks) {
                out.push((r.method.clone(), r.ranks.clone(), r.threshold));
            }
        }
        out
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Runs the sweep. Repetition `rep` of rank tuple `t` uses the same tensor
/// for every method and fraction; masks depend on (t, rep, fraction index).
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let mut fractions = cfg.fractions.clone();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (t, ranks) in cfg.rank_tuples.iter().enumerate() {
        let tensors = (0..cfg.nrep)
            .map(|rep| {
                let spec = SynthSpec::new(cfg.shape.clone(), ranks.clone(), derive_seed(cfg.seed, &[t as u64, rep as u64]))?;
                gen_lowrank(&spec)
            })
            .collect::<Result<Vec<_>>>()?;
        for &method in &cfg.methods {
            let first = rows.len();
            for (fi, &fraction) in fractions.iter().enumerate() {
                let mut cell = Vec::with_capacity(cfg.nrep);
                for (rep, x) in tensors.iter().enumerate() {
                    let mask_seed = derive_seed(cfg.seed, &[t as u64, rep as u64, fi as u64, 1]);
                    let obs = observe_fraction(x, fraction, mask_seed)?;
                    let (res, sol) = run_experiment(x, &obs, method, &cfg.solver)?;
                    log::info!(
                        "{} ranks {:?} fraction {fraction} rep {rep}: error {:.3e}, {} iterations",
                        res.method,
                        ranks,
                        res.error,
                        res.iterations
                    );
                    cell.push(res.clone());
                    runs.push((ExperimentResult { fraction, ..res }, sol.diagnostics));
                }
                let errors: Vec<f64> = cell.iter().map(|r| r.error).collect();
                let (mean_error, sd_error) = mean_sd(&errors);
                let times: Vec<f64> = cell.iter().map(|r| r.wall_time).collect();
                let iters: Vec<f64> = cell.iter().map(|r| r.iterations as f64).collect();
                rows.push(SweepRow {
                    method: method.label(),
                    ranks: ranks.clone(),
                    sum_of_ranks: sum_of_ranks(ranks),
                    fraction,
                    mean_error,
                    sd_error,
                    mean_time: mean_sd(&times).0,
                    mean_iterations: mean_sd(&iters).0,
                    converged: cell.iter().filter(|r| r.converged).count(),
                    nrep: cfg.nrep,
                    threshold: None,
                });
                if cfg.stop_at_threshold && mean_error < RECOVERY_THRESHOLD {
                    break;
                }
            }
            let threshold = rows[first..].iter().find(|r| r.mean_error < RECOVERY_THRESHOLD).map(|r| r.fraction);
            rows[first..].iter_mut().for_each(|r| r.threshold = threshold);
        }
    }
    Ok(SweepOutcome { rows, runs })
}

/// CSV with a header row. Floats use round-trip precision; with
/// `timing == false` the time column is written as 0 so repeated runs are
/// byte-identical.
pub fn sweep_csv(rows: &[SweepRow], timing: bool) -> String {
    let mut out = String::from(
        "method,ranks,sum_of_ranks,fraction,nrep,mean_error,sd_error,mean_time,mean_iterations,converged,threshold\n",
    );
    for r in rows {
        let ranks: Vec<String> = r.ranks.iter().map(ToString::to_string).collect();
        let threshold = r.threshold.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            ranks.join("x"),
            r.sum_of_ranks,
            r.fraction,
            r.nrep,
            r.mean_error,
            r.sd_error,
            if timing { r.mean_time } else { 0.0 },
            r.mean_iterations,
            r.converged,
            threshold
        )
        .expect("writing to a String");
    }
    out
}

/// Versioned diagnostics document written next to a completion result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub schema: String,
    pub method: String,
    pub config: SolverConfig,
    pub shape: Vec<usize>,
    pub observed: usize,
    pub eta: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub final_gap: Option<f64>,
    pub records: Vec<GapRecord>,
    /// Seconds; absent when timing is disabled.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
}

impl DiagnosticsReport {
    pub const SCHEMA: &'static str = "diag-v1";

    pub fn new(solution: &Solution, obs: &ObservationSet, cfg: &SolverConfig, wall_time: Option<f64>) -> Self {
        let d = &solution.diagnostics;
        Self {
            schema: Self::SCHEMA.into(),
            method: solution.method.label(),
            config: cfg.clone(),
            shape: obs.shape().to_vec(),
            observed: obs.len(),
            eta: solution.eta,
            iterations: d.iterations,
            termination: d.termination,
            final_gap: d.final_gap(),
            records: d.records.clone(),
            wall_time,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_per_cell() {
        let a = derive_seed(0, &[0, 0]);
        assert_ne!(a, derive_seed(0, &[0, 1]));
        assert_ne!(a, derive_seed(0, &[1, 0]));
        assert_ne!(a, derive_seed(1, &[0, 0]));
        assert_eq!(a, derive_seed(0, &[0, 0]));
    }

    #[test]
    fn mean_and_sample_sd() {
        assert_eq!(mean_sd(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_grid_rejected() {
        let cfg = SweepConfig::new(vec![4, 4, 4], vec![vec![1, 1, 1]], vec![Method::Constraint], vec![]);
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn csv_header_and_blank_threshold() {
        let row = SweepRow {
            method: "constraint".into(),
            ranks: vec![7, 8, 9],
            sum_of_ranks: 24,
            fraction: 0.35,
            mean_error: 0.5,
            sd_error: 0.0,
            mean_time: 1.25,
            mean_iterations: 10.0,
            converged: 1,
            nrep: 1,
            threshold: None,
        };
        let csv = sweep_csv(&[row], false);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "constraint,7x8x9,24,0.35,1,0.5,0,0,10,1,");
    }
}
