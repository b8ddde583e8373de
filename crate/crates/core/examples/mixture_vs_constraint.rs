//! A tensor that is low rank in only one mode: rank (50,50,5) with shape
//! (50,50,20). The mixture of low-rank tensors finds the rank-deficient mode
//! on its own; the overlapped trace norm does not.
//!
//! cargo run --release --example mixture_vs_constraint

use tracenorm::factorize::detect_ranks;
use tracenorm::workbench::{gen_lowrank, generalization_error, observe_fraction, SynthSpec};
use tracenorm::{solve, Method, SolverConfig};

fn main() -> tracenorm::Result<()> {
    let truth = gen_lowrank(&SynthSpec::new(vec![50, 50, 20], vec![50, 50, 5], 5)?)?;
    let obs = observe_fraction(&truth, 0.7, 6)?;
    for method in [Method::Constraint, Method::Mixture, Method::AsMatrix { mode: 2 }] {
        let s = solve(method, &obs, &SolverConfig::default())?;
        println!(
            "{:<11} error {:.3e}  iterations {:>4}  component ranks {:?}",
            method.label(),
            generalization_error(&s.x_hat, &truth, &obs)?,
            s.diagnostics.iterations,
            detect_ranks(&s.components, 0.01)?
        );
    }
    Ok(())
}
