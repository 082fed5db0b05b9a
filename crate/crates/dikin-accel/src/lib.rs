//! Primal affine-scaling solvers for linear programs.
//!
//! Three related interior-point iterations over the standard form
//! `min c'x, a x = b, x >= 0`:
//!
//! * **afs** — classical affine scaling: step along the scaled projected
//!   steepest-descent direction inside the Dikin ellipsoid;
//! * **gafs** — the same step applied from a momentum-shifted point
//!   `z_k = x_k + beta * (x_k - x_{k-1}) / ||X_k^-1 (x_k - x_{k-1})||_inf`;
//! * **aafs** — gafs plus an entrywise Aitken/Shanks transform of the
//!   iterate stream, used for the stopping test and the reported solution.
//!
//! The crate also ships an MPS reader, seeded Gaussian instance generation,
//! a phase-I construction for instances without a known interior point, and
//! per-iteration diagnostics. The `dikin-accel` binary wraps everything in
//! `solve` and `bench` subcommands.
//!
//! ```
//! use dikin_accel::{solve, Algorithm, LinearProgram, SolverConfig, SolveStatus};
//! use ndarray::array;
//!
//! let lp = LinearProgram::with_default_names(
//!     array![[1.0, 1.0]],
//!     array![2.0],
//!     array![1.0, 2.0],
//! )
//! .unwrap();
//! let config = SolverConfig::new(Algorithm::Gafs, 0.55, 0.1);
//! let outcome = solve(&lp, Some(&array![1.0, 1.0]), &config).unwrap();
//! assert_eq!(outcome.status, SolveStatus::Optimal);
//! assert!((outcome.objective.unwrap() - 2.0).abs() < 1e-6);
//! ```

pub mod cli;
pub mod diagnostics;
pub mod linalg;
pub mod model;
pub mod mps;
pub mod solver;

pub use linalg::NormRule;
pub use model::{GeneralLp, LinearProgram, Phase1Problem, RandomLpSpec};
pub use solver::{solve, Algorithm, SolveOutcome, SolveStatus, SolverConfig};
