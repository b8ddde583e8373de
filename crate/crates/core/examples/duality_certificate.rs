//! Every solver certifies its answer: the multipliers are projected onto the
//! dual feasible set, and the run stops when the relative gap between the
//! primal objective and the best dual value drops below the tolerance.
//!
//! cargo run --release --example duality_certificate

use tracenorm::workbench::{gen_lowrank, observe_fraction, SynthSpec};
use tracenorm::{solve, Method, SolverConfig};

fn main() -> tracenorm::Result<()> {
    let truth = gen_lowrank(&SynthSpec::new(vec![20, 20, 10], vec![3, 3, 3], 9)?)?;
    let obs = observe_fraction(&truth, 0.4, 10)?;
    for lambda in [0.0, 0.1] {
        for method in [Method::AsMatrix { mode: 0 }, Method::Constraint, Method::Mixture] {
            let cfg = SolverConfig { lambda, tol: 1e-4, gap_interval: 5, ..Default::default() };
            let s = solve(method, &obs, &cfg)?;
            println!("{method} with lambda = {lambda}:");
            for r in s.diagnostics.records.iter().step_by(4) {
                println!(
                    "  iter {:>4}  primal {:>12}  best dual {:>12.6}  gap {}",
                    r.iteration,
                    r.primal.map_or("infeasible".into(), |p| format!("{p:.6}")),
                    r.best_dual,
                    r.gap.map_or("-".into(), |g| format!("{g:.2e}"))
                );
            }
            println!("  stopped after {} iterations: {:?}", s.diagnostics.iterations, s.diagnostics.termination);
        }
    }
    Ok(())
}
