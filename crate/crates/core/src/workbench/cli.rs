//! Command-line front end. Modes are 1-based on the command line.
//!
//! Exit codes: 0 on success (and convergence), 2 when a solve stopped at the
//! iteration cap, 1 on invalid input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::factorize::{combine_factors, cp_als, detect_ranks, extract_tucker, CpAlsOptions, Model};
use crate::io;
use crate::solvers::{solve, Method, Solution, SolverConfig};
use crate::tensor::ObservationSet;

use super::experiment::{run_sweep, sweep_csv, DiagnosticsReport, SweepConfig};
use super::synth::{gen_lowrank, generalization_error, sample_mask, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "tracenorm", version, about = "Low-rank tensor completion with trace-norm regularization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random low-rank tensor (.ten).
    Synth(SynthArgs),
    /// Observe a random fraction of a tensor (.obs).
    Mask(MaskArgs),
    /// Complete a tensor from observations.
    Complete(CompleteArgs),
    /// Complete, then extract Tucker and CP factors.
    Factors(FactorsArgs),
    /// Sweep observation fractions and rank tuples; emits CSV.
    Sweep(SweepArgs),
    /// Generalization error of a prediction on the unobserved entries.
    Eval(EvalArgs),
}

/// Solver settings shared by every solving subcommand.
#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Relative duality gap at which to stop.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    /// Step-size constant.
    #[arg(long, default_value_t = 0.1)]
    pub eta0: f64,
    /// Noise level; 0 interpolates the observations exactly.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Per-mode trace-norm weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Iterations between duality-gap evaluations.
    #[arg(long, default_value_t = 1)]
    pub gap_interval: usize,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda,
            gammas: self.gamma.clone(),
            eta0: self.eta0,
            tol: self.tol,
            max_iter: self.max_iter,
            gap_interval: self.gap_interval,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    Constraint,
    Mixture,
    Matrix,
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodName::Constraint)]
    pub method: MethodName,
    /// Unfolding mode (1-based) for `--method matrix`.
    #[arg(long)]
    pub mode: Option<usize>,
}

impl MethodArgs {
    fn resolve(&self, order: usize) -> Result<Method> {
        match (self.method, self.mode) {
            (MethodName::Matrix, None) => Err(Error::InvalidArgument("--mode is required with --method matrix".into())),
            (MethodName::Matrix, Some(m)) if m == 0 || m > order => Err(Error::InvalidArgument(format!(
                "--mode {m} is outside 1..={order} for a {order}-way tensor"
            ))),
            (MethodName::Matrix, Some(m)) => Ok(Method::AsMatrix { mode: m - 1 }),
            (_, Some(_)) => Err(Error::InvalidArgument("--mode only applies to --method matrix".into())),
            (MethodName::Constraint, None) => Ok(Method::Constraint),
            (MethodName::Mixture, None) => Ok(Method::Mixture),
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Extents, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub shape: Vec<usize>,
    /// Multilinear ranks, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ranks: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output .ten file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Tensor to sample from (.ten).
    #[arg(long)]
    pub tensor: PathBuf,
    /// Fraction of entries to observe, in (0, 1].
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output .obs file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    /// Observations (.obs).
    #[arg(long)]
    pub obs: PathBuf,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Accepted for uniformity; the solvers are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Recovered tensor (.ten).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Diagnostics JSON.
    #[arg(long)]
    pub diag: Option<PathBuf>,
    /// Auxiliary matrices of the solver (.fac, unfolding shape per mode).
    #[arg(long)]
    pub components: Option<PathBuf>,
    /// Omit wall time from the diagnostics so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct FactorsArgs {
    /// Observations (.obs).
    #[arg(long)]
    pub obs: PathBuf,
    /// Number of CP components to fit on the core.
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    /// Relative singular-value threshold for rank detection.
    #[arg(long, default_value_t = crate::factorize::DEFAULT_RANK_TOL)]
    pub rel_tol: f64,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Seed for the CP initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Full-size CP model (.fac, stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tucker model (.fac).
    #[arg(long)]
    pub tucker: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub shape: Vec<usize>,
    /// Rank tuple, comma separated; repeat for several tuples.
    #[arg(long, required = true)]
    pub ranks: Vec<String>,
    /// Methods, comma separated: constraint, mixture, matrix1, matrix2, ...
    #[arg(long, value_delimiter = ',', default_value = "constraint")]
    pub methods: Vec<String>,
    /// Fractions, comma separated, or `start:stop:step`.
    #[arg(long, default_value = "0.05:0.95:0.05")]
    pub fractions: String,
    #[arg(long, default_value_t = 5)]
    pub nrep: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Stop a series at the first fraction that reaches the threshold.
    #[arg(long)]
    pub stop_at_threshold: bool,
    /// Write 0 in the time column so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
    /// CSV output (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction (.ten).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground truth (.ten).
    #[arg(long)]
    pub truth: PathBuf,
    /// Training observations (.obs); their entries are excluded.
    #[arg(long)]
    pub obs: PathBuf,
    /// JSON output (stdout gets the bare number when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::InvalidArgument(format!("{flag}: cannot parse `{t}`"))))
        .collect()
}

/// `a,b,c` or `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_fractions(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [_] => parse_list(s, "--fractions"),
        [a, b, c] => {
            let [start, stop, step]: [f64; 3] = [a, b, c]
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("--fractions: cannot parse `{t}`"))))
                .into_iter()
                .collect::<Result<Vec<_>>>()?
                .try_into()
                .expect("three parts");
            if !(step > 0.0) || stop < start {
                return Err(Error::InvalidArgument(format!("--fractions: empty range `{s}`")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // round to the step's decimal grid so 0.05*7 prints as 0.35
            Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
        }
        _ => Err(Error::InvalidArgument(format!("--fractions: expected a list or start:stop:step, got `{s}`"))),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn exit_code(solution: &Solution) -> i32 {
    if solution.diagnostics.converged() {
        0
    } else {
        2
    }
}

fn summary(solution: &Solution, obs: &ObservationSet) -> String {
    let d = &solution.diagnostics;
    format!(
        "{}: {} observed of {}, {} iterations, {}, final gap {}",
        solution.method,
        obs.len(),
        solution.x_hat.len(),
        d.iterations,
        if d.converged() { "converged" } else { "stopped at max-iter" },
        d.final_gap().map_or("n/a".into(), |g| format!("{g:.3e}"))
    )
}

fn cmd_synth(a: &SynthArgs) -> Result<i32> {
    let x = gen_lowrank(&SynthSpec::new(a.shape.clone(), a.ranks.clone(), a.seed)?)?;
    emit(a.out.as_deref(), &io::format_tensor(&x))?;
    Ok(0)
}

fn cmd_mask(a: &MaskArgs) -> Result<i32> {
    let x = io::read_tensor(&a.tensor)?;
    let obs = ObservationSet::sample(&x, sample_mask(x.shape(), a.fraction, a.seed)?)?;
    emit(a.out.as_deref(), &io::format_observations(&obs))?;
    Ok(0)
}

fn cmd_complete(a: &CompleteArgs) -> Result<i32> {
    let obs = io::read_observations(&a.obs)?;
    let method = a.method.resolve(obs.shape().len())?;
    let cfg = a.solver.config();
    let start = Instant::now();
    let solution = solve(method, &obs, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    if let Some(p) = &a.out {
        io::write_tensor(p, &solution.x_hat)?;
    }
    if let Some(p) = &a.components {
        fs::write(p, io::format_factors(&solution.components))?;
    }
    if let Some(p) = &a.diag {
        let report = DiagnosticsReport::new(&solution, &obs, &cfg, (!a.no_timing).then_some(elapsed));
        fs::write(p, report.to_json()?)?;
    }
    eprintln!("{}", summary(&solution, &obs));
    Ok(exit_code(&solution))
}

fn cmd_factors(a: &FactorsArgs) -> Result<i32> {
    let obs = io::read_observations(&a.obs)?;
    let method = a.method.resolve(obs.shape().len())?;
    let solution = solve(method, &obs, &a.solver.config())?;
    eprintln!("{}", summary(&solution, &obs));
    let ranks = detect_ranks(&solution.components, a.rel_tol)?;
    let tucker = extract_tucker(&solution, a.rel_tol)?;
    eprintln!(
        "detected ranks {:?} (modes {:?}); core {:?}",
        ranks,
        solution.modes.iter().map(|k| k + 1).collect::<Vec<_>>(),
        tucker.core().shape()
    );
    let opts = CpAlsOptions { seed: a.seed, restarts: a.restarts, ..CpAlsOptions::default() };
    let fit = cp_als(tucker.core(), a.rank, &opts)?;
    eprintln!("CP fit on core {:.6} after {} sweeps", fit.fit, fit.sweeps);
    let full = combine_factors(&tucker, &fit.model)?;
    if let Some(p) = &a.tucker {
        io::write_model(p, &Model::Tucker(tucker))?;
    }
    emit(a.out.as_deref(), &io::format_model(&Model::Cp(full)))?;
    Ok(exit_code(&solution))
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let rank_tuples = a.ranks.iter().map(|r| parse_list(r, "--ranks")).collect::<Result<Vec<Vec<usize>>>>()?;
    let methods = a.methods.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?;
    let order = a.shape.len();
    if let Some(Method::AsMatrix { mode }) = methods.iter().find(|m| matches!(m, Method::AsMatrix { mode } if *mode >= order)) {
        return Err(Error::InvalidArgument(format!("--methods: mode {} is outside 1..={order}", mode + 1)));
    }
    let cfg = SweepConfig {
        shape: a.shape.clone(),
        rank_tuples,
        methods,
        fractions: parse_fractions(&a.fractions)?,
        nrep: a.nrep,
        seed: a.seed,
        solver: a.solver.config(),
        stop_at_threshold: a.stop_at_threshold,
    };
    let outcome = run_sweep(&cfg)?;
    emit(a.out.as_deref(), &sweep_csv(&outcome.rows, !a.no_timing))?;
    Ok(0)
}

fn cmd_eval(a: &EvalArgs) -> Result<i32> {
    let pred = io::read_tensor(&a.pred)?;
    let truth = io::read_tensor(&a.truth)?;
    let obs = io::read_observations(&a.obs)?;
    let error = generalization_error(&pred, &truth, &obs)?;
    match &a.out {
        Some(p) => fs::write(p, serde_json::to_string_pretty(&serde_json::json!({ "error": error }))?)?,
        None => println!("{error}"),
    }
    Ok(0)
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Mask(a) => cmd_mask(a),
        Command::Complete(a) => cmd_complete(a),
        Command::Factors(a) => cmd_factors(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion
                | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
