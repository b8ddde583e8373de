//! Experiment tooling: synthetic data, masks, error metrics, sweeps and the
//! command-line front end.

pub mod cli;
pub mod experiment;
pub mod synth;

pub use experiment::{
    derive_seed, run_experiment, run_sweep, sweep_csv, DiagnosticsReport, ExperimentResult,
    SweepConfig, SweepOutcome, SweepRow, RECOVERY_THRESHOLD,
};
pub use synth::{
    gen_lowrank, gen_lowrank_model, generalization_error, observe_fraction, sample_count,
    sample_mask, sum_of_ranks, SynthSpec,
};
