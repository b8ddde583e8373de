//! Observation fraction needed for recovery grows with the sum of the mode
//! ranks. Prints the sweep as CSV and the threshold of each rank tuple.
//!
//! cargo run --release --example phase_transition_sweep

use tracenorm::workbench::{run_sweep, sum_of_ranks, sweep_csv, SweepConfig};
use tracenorm::Method;

fn main() -> tracenorm::Result<()> {
    let fractions = (1..=12).map(|i| i as f64 * 0.05).map(|f| (f * 1e12).round() / 1e12).collect();
    let mut cfg = SweepConfig::new(
        vec![50, 50, 20],
        vec![vec![2, 2, 2], vec![5, 5, 5], vec![7, 8, 9], vec![10, 10, 10]],
        vec![Method::Constraint],
        fractions,
    );
    cfg.nrep = 2;
    cfg.stop_at_threshold = true;
    let out = run_sweep(&cfg)?;
    print!("{}", sweep_csv(&out.rows, true));
    println!();
    for (method, ranks, threshold) in out.thresholds() {
        println!(
            "{method} ranks {ranks:?} (sum {}): threshold {}",
            sum_of_ranks(&ranks),
            threshold.map_or("not reached".into(), |t| format!("{t}"))
        );
    }
    Ok(())
}
