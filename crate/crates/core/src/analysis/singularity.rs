//! Conditions under which a control can be singular on an interval.
//!
//! A switching function `lam_i x_j` can only vanish on an interval through
//! `x_j = 0`, because `lam_i = 0` on an interval contradicts the terminal
//! condition. Holding `x2 = 0` while spouse 1 sits at its disposition needs
//! `x1_0 = xbar1` and `-r2 xbar2 = u2max xbar1`; the mirrored conditions hold
//! for spouse 2.

use serde::Serialize;

use crate::model::ModelParams;

/// Residuals of the two equalities a singular arc needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularWitness {
    /// Initial-state residual, e.g. `x1_0 - xbar1`.
    pub initial_gap: f64,
    /// Balance residual, e.g. `-r2 xbar2 - u2max xbar1`.
    pub balance_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityReport {
    pub u1_singular_capable: bool,
    pub u1_witness: SingularWitness,
    /// Mirrored reading: `x2_0 = xbar2` and `-r1 xbar1 = u1max xbar2`.
    pub u2_singular_capable: bool,
    pub u2_witness: SingularWitness,
    /// Literal reading: `x2_0 = xbar1` and `-r1 xbar1 = u1max xbar2`.
    pub u2_singular_capable_literal: bool,
    pub u2_literal_witness: SingularWitness,
    /// A costate can never vanish on an interval.
    pub lambda_interval_zero_possible: bool,
    pub lambda_interval_zero_reason: String,
}

/// Default relative tolerance for the equalities.
pub const SINGULAR_TOL: f64 = 1e-9;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

fn witness(x0: f64, target: f64, lhs: f64, rhs: f64, tol: f64) -> (bool, SingularWitness) {
    let w = SingularWitness {
        initial_gap: x0 - target,
        balance_gap: lhs - rhs,
    };
    (close(x0, target, tol) && close(lhs, rhs, tol), w)
}

fn lambda_reason(alpha: f64) -> String {
    let tail = if alpha == 1.0 {
        "with alpha = 1 the first adjoint equation reduces to 0 = -1"
    } else if alpha == 0.0 {
        "with alpha = 0 the remaining adjoint equation only holds at t = T, not on an interval"
    } else {
        "with alpha in (0, 1) an admissible partner control would need t > T"
    };
    format!(
        "lam_i = 0 on an interval forces lam_i' = 0; solving the other adjoint equation \
         from its terminal value then fails: {tail}"
    )
}

pub fn singularity_report(p: &ModelParams, tol: f64) -> SingularityReport {
    let (u1_singular_capable, u1_witness) =
        witness(p.x1_0, p.xbar1, -p.r2 * p.xbar2, p.u2max * p.xbar1, tol);
    let balance2 = (-p.r1 * p.xbar1, p.u1max * p.xbar2);
    let (u2_singular_capable, u2_witness) = witness(p.x2_0, p.xbar2, balance2.0, balance2.1, tol);
    let (u2_singular_capable_literal, u2_literal_witness) =
        witness(p.x2_0, p.xbar1, balance2.0, balance2.1, tol);
    SingularityReport {
        u1_singular_capable,
        u1_witness,
        u2_singular_capable,
        u2_witness,
        u2_singular_capable_literal,
        u2_literal_witness,
        lambda_interval_zero_possible: false,
        lambda_interval_zero_reason: lambda_reason(p.alpha),
    }
}
