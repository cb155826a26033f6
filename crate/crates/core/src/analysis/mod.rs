//! Structural analyses of the necessary conditions and of solved
//! trajectories.

mod equilibrium;
mod hamiltonian;
mod influence;
mod singularity;
mod style;

pub use equilibrium::{
    adjoint_eigenvalues, adjoint_equilibrium, classify_adjoint_equilibrium, classify_eigenvalues,
    classify_region, Classification, EquilibriumReport,
};
pub use hamiltonian::{
    concavity_probe, maximized_hamiltonian, ConcavityReport, StateBox, CONCAVITY_TOL, PROBE_STEP,
};
pub use influence::{
    influence_samples, least_squares_slope, slope_profile, InfluenceSample, SlopeProfile, SlopeWindow,
    MIN_X_VARIANCE,
};
pub use singularity::{singularity_report, SingularWitness, SingularityReport, SINGULAR_TOL};
pub use style::{style_classify, SpouseStyle, Style, StyleThresholds, StyleVerdict};

use crate::solver::Trajectory;

/// True when both adjoints stay above `-tol` on every node before `T`.
pub fn adjoint_positivity_check(traj: &Trajectory, tol: f64) -> bool {
    let n = traj.len();
    (0..n.saturating_sub(1)).all(|k| traj.lam1[k] > -tol && traj.lam2[k] > -tol)
}
