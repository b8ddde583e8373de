//! Completion of partially observed tensors by trace-norm regularization.
//!
//! The crate is organized bottom-up:
//!
//! * [`tensor`] and [`matrix`]: dense storage, unfolding/folding, mode
//!   products and the sampling operator.
//! * [`spectral`]: SVD, trace and spectral norms, soft-thresholding and
//!   spectral-ball projection.
//! * [`solvers`]: the "as a matrix", "constraint" and "mixture" ADMM solvers
//!   with duality-gap stopping.
//! * [`factorize`]: rank detection, Tucker extraction, CP on the core and
//!   recombination into full-size CP factors.
//! * [`workbench`]: synthetic data, masks, error metrics, sweeps, file formats
//!   and the command-line front end.
//!
//! Modes are 0-based in the library API; file formats and the CLI use 1-based
//! indices.

pub mod error;
pub mod factorize;
pub mod io;
pub mod matrix;
pub mod solvers;
pub mod spectral;
pub mod tensor;
pub mod workbench;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use solvers::{
    solve, solve_as_matrix, solve_constraint, solve_mixture, Diagnostics, Method, Solution,
    SolverConfig, Termination,
};
pub use tensor::{fold, mode_product, observe, scatter, unfold, DenseTensor, ObservationSet};
