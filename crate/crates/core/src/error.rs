use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration value violates its documented constraint.
    #[error("invalid parameter `{key}`: {constraint}")]
    InvalidParameter { key: &'static str, constraint: String },

    /// Array lengths or grid shape do not describe a usable trajectory.
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    /// A sweep produced a non-finite value.
    #[error("{sweep} sweep diverged at node {node}")]
    Divergence { sweep: &'static str, node: usize },

    /// A sweep diverged inside the forward-backward iteration.
    #[error("iteration {iteration}: {source}")]
    SolveDiverged {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// `r1 * r2 == u0^2`: the zeroth-order particular solution does not exist.
    #[error("resonant parameters: r1*r2 = u0^2 = {0}")]
    Resonant(f64),

    /// The zeroth-order system has a repeated eigenvalue.
    #[error("repeated eigenvalue {0}: closed form unavailable, use the sweep solver")]
    RepeatedEigenvalue(f64),

    /// The first-order correction divides by alpha and 1 - alpha.
    #[error("alpha = {0} is an altruist regime; the first-order correction needs alpha in (0, 1)")]
    AltruistRegime(f64),

    /// The perturbation expansion needs a finite cost scale.
    #[error("perturbation expansion requires a finite epsilon")]
    InfiniteEpsilon,

    /// `r1 * r2 == u1 * u2`: the adjoint equilibrium is at infinity.
    #[error("degenerate adjoint equilibrium: r1*r2 = u1*u2 = {0}")]
    DegenerateEquilibrium(f64),

    /// Exhaustive oracle search would exceed the candidate budget.
    #[error("oracle budget exceeded: {candidates} candidates > {budget}")]
    BudgetExceeded { candidates: f64, budget: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(key: &'static str, constraint: impl Into<String>) -> Error {
    Error::InvalidParameter {
        key,
        constraint: constraint.into(),
    }
}
