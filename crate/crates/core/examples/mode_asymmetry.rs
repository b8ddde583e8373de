//! Treating the tensor as a matrix works only for some unfoldings: with 40%
//! of a rank-(7,8,9) tensor of shape (50,50,20) observed, modes 1 and 2
//! recover the tensor while mode 3 does not.
//!
//! cargo run --release --example mode_asymmetry

use tracenorm::workbench::{gen_lowrank, generalization_error, observe_fraction, SynthSpec};
use tracenorm::{solve_as_matrix, SolverConfig};

fn main() -> tracenorm::Result<()> {
    let truth = gen_lowrank(&SynthSpec::new(vec![50, 50, 20], vec![7, 8, 9], 3)?)?;
    for fraction in [0.2, 0.4, 0.6, 0.8] {
        let obs = observe_fraction(&truth, fraction, 4)?;
        let errors = (0..3)
            .map(|k| {
                let s = solve_as_matrix(&obs, k, &SolverConfig::default())?;
                generalization_error(&s.x_hat, &truth, &obs)
            })
            .collect::<tracenorm::Result<Vec<_>>>()?;
        println!(
            "{:>3.0}% observed: mode 1 {:.2e}  mode 2 {:.2e}  mode 3 {:.2e}",
            fraction * 100.0,
            errors[0],
            errors[1],
            errors[2]
        );
    }
    Ok(())
}
