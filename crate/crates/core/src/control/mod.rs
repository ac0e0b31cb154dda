//! Time-inconsistent harvesting control.
//!
//! [`ControlProblem`] holds the model constants, [`Lattice`] the space-time
//! grid plus the discretized terminal weight spectrum, and [`solve`] runs the
//! explicit backward sweep for the value function, the equilibrium arrival
//! intensity and the auxiliary certainty-equivalent fields.

mod lattice;
mod maximize;
mod problem;
mod solver;

pub use lattice::Lattice;
pub use maximize::{maximize_theta, ThetaMax};
pub use problem::{ControlParams, ControlProblem};
pub use solver::{solve, solve_standard, BoundReport, SolveOptions, SolverOutput, StandardOutput};
