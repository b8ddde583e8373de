//! Complete a rank-(7,8,9) tensor from 35% of its entries with the
//! overlapped trace norm ("constraint" method).
//!
//! cargo run --release --example complete_synthetic

use tracenorm::workbench::{gen_lowrank, generalization_error, observe_fraction, SynthSpec};
use tracenorm::{solve_constraint, SolverConfig};

fn main() -> tracenorm::Result<()> {
    let truth = gen_lowrank(&SynthSpec::new(vec![50, 50, 20], vec![7, 8, 9], 1)?)?;
    let obs = observe_fraction(&truth, 0.35, 2)?;
    let solution = solve_constraint(&obs, &SolverConfig::default())?;

    let d = &solution.diagnostics;
    println!("observed {} of {} entries", obs.len(), truth.len());
    println!(
        "{} iterations, {:?}, relative duality gap {:.2e}",
        d.iterations,
        d.termination,
        d.final_gap().unwrap_or(f64::NAN)
    );
    println!("generalization error {:.3e}", generalization_error(&solution.x_hat, &truth, &obs)?);
    Ok(())
}
