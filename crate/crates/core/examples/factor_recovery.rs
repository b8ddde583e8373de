//! Interpretable factors from incomplete data: complete, read the Tucker
//! structure off the solver's auxiliary matrices, fit CP on the small core
//! and map the CP factors back to full size.
//!
//! cargo run --release --example factor_recovery

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracenorm::factorize::{combine_factors, cp_als, detect_ranks, extract_tucker, match_columns, CpAlsOptions, CpModel};
use tracenorm::workbench::{generalization_error, observe_fraction};
use tracenorm::{solve_constraint, Matrix, SolverConfig};

fn main() -> tracenorm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let factors = [30, 30, 20].iter().map(|&n| Matrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0))).collect();
    let truth = CpModel::from_weighted(vec![3.0, 2.0, 1.0], factors)?;
    let x = truth.reconstruct()?;
    let obs = observe_fraction(&x, 0.5, 8)?;

    let solution = solve_constraint(&obs, &SolverConfig::default())?;
    println!("completion error {:.2e}", generalization_error(&solution.x_hat, &x, &obs)?);
    println!("detected ranks {:?}", detect_ranks(&solution.components, 0.01)?);

    let tucker = extract_tucker(&solution, 0.01)?;
    let fit = cp_als(tucker.core(), 3, &CpAlsOptions { restarts: 5, ..Default::default() })?;
    println!("core {:?}, CP fit {:.6} in {} sweeps", tucker.core().shape(), fit.fit, fit.sweeps);

    let recovered = combine_factors(&tucker, &fit.model)?;
    println!("weights: true {:.3?}, recovered {:.3?}", truth.weights(), recovered.weights());
    for k in 0..3 {
        let cos: Vec<String> = match_columns(&truth.factors()[k], &recovered.factors()[k])?
            .iter()
            .map(|m| m.map_or("-".into(), |(j, c)| format!("{j}:{c:.5}")))
            .collect();
        println!("mode {} |cosine| per true column: {}", k + 1, cos.join("  "));
    }
    Ok(())
}
