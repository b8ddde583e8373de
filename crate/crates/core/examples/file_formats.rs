//! The text formats read and written by the command-line tool: tensors
//! (.ten), observations (.obs, 1-based indices) and factor models (.fac).
//!
//! cargo run --release --example file_formats

use tracenorm::factorize::{extract_tucker, Model};
use tracenorm::io;
use tracenorm::workbench::{gen_lowrank, observe_fraction, SynthSpec};
use tracenorm::{solve_constraint, SolverConfig};

fn main() -> tracenorm::Result<()> {
    let x = gen_lowrank(&SynthSpec::new(vec![3, 2, 2], vec![1, 1, 1], 0)?)?;
    let obs = observe_fraction(&x, 0.5, 0)?;

    let ten = io::format_tensor(&x);
    let obs_text = io::format_observations(&obs);
    println!("--- x.ten\n{ten}--- x.obs\n{obs_text}");
    assert_eq!(io::parse_tensor(&ten)?, x);
    assert_eq!(io::parse_observations(&obs_text)?, obs);

    let full = observe_fraction(&x, 1.0, 0)?;
    let tucker = extract_tucker(&solve_constraint(&full, &SolverConfig::default())?, 0.01)?;
    let fac = io::format_model(&Model::Tucker(tucker));
    println!("--- tucker.fac\n{fac}");

    match io::parse_tensor("tensor v1\n2 2\n1.0 2.0 oops 4.0\n") {
        Err(e) => println!("parse error: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
