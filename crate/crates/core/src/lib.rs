//! Optimal interaction strategies for a coupled two-spouse positivity model.
//!
//! The crate solves the maximum-principle boundary-value problem with a
//! forward-backward sweep ([`solver`]), checks it against a small-epsilon
//! expansion ([`perturbation`]) and a brute-force control search, and
//! analyzes the results ([`analysis`]): adjoint phase-plane structure,
//! singular arcs, interaction styles and influence slopes. The [`cli`]
//! module drives scenario files and writes CSV/JSON outputs.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod model;
pub mod perturbation;
mod rk4;
pub mod solver;

pub use error::{Error, Result};
pub use model::{AdjointVec, ControlVec, Epsilon, ModelParams, Spouse, StateVec};
pub use solver::{fbs_solve, Grid, SolveResult, SolverConfig, Trajectory};
