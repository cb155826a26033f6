//! Fixed point and eigenstructure of the adjoint system with frozen controls.
//!
//! With constant controls the adjoint equations are linear,
//! `lam' = J lam - (alpha, 1 - alpha)` with `J = [[r1, -u2], [-u1, r2]]`, so
//! the phase plane is organized by one fixed point and the eigenvalues
//! `mu = (r1 + r2 +- sqrt((r1 - r2)^2 + 4 u1 u2)) / 2`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AdjointVec, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Saddle,
    UnstableNode,
    UnstableSpiral,
    /// On a region boundary: `u1 u2 = r1 r2` or a repeated eigenvalue.
    Degenerate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Saddle => "Saddle",
            Classification::UnstableNode => "UnstableNode",
            Classification::UnstableSpiral => "UnstableSpiral",
            Classification::Degenerate => "Degenerate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumReport {
    /// `None` when the fixed point is at infinity (`r1 r2 = u1 u2`).
    pub point: Option<AdjointVec>,
    pub mu_plus: Complex64,
    pub mu_minus: Complex64,
    /// Eigenvector of `mu_plus`.
    pub v: [Complex64; 2],
    /// Eigenvector of `mu_minus`.
    pub w: [Complex64; 2],
    pub classification: Classification,
}

const REL_TOL: f64 = 1e-12;

/// Fixed point of the adjoint system for frozen controls `u1, u2`.
pub fn adjoint_equilibrium(p: &ModelParams, u1: f64, u2: f64) -> Result<AdjointVec> {
    let den = p.r1 * p.r2 - u1 * u2;
    if den.abs() <= REL_TOL * (p.r1 * p.r2).max((u1 * u2).abs()) {
        return Err(Error::DegenerateEquilibrium(p.r1 * p.r2));
    }
    let a = p.alpha;
    Ok(AdjointVec {
        lam1: ((1.0 - a) * u2 + a * p.r2) / den,
        lam2: ((1.0 - a) * p.r1 + a * u1) / den,
    })
}

/// Eigenvalues `(mu_plus, mu_minus)` of `[[r1, -u2], [-u1, r2]]`.
pub fn adjoint_eigenvalues(r1: f64, r2: f64, u1: f64, u2: f64) -> (Complex64, Complex64) {
    if u1 * u2 == 0.0 {
        // triangular Jacobian: the rates themselves
        return (Complex64::new(r1.max(r2), 0.0), Complex64::new(r1.min(r2), 0.0));
    }
    let trace = r1 + r2;
    let det = r1 * r2 - u1 * u2;
    let disc = (r1 - r2) * (r1 - r2) + 4.0 * u1 * u2;
    if disc >= 0.0 {
        let plus = 0.5 * (trace + disc.sqrt());
        // product form avoids cancellation when det is small
        let minus = if plus != 0.0 { det / plus } else { 0.5 * (trace - disc.sqrt()) };
        (Complex64::new(plus, 0.0), Complex64::new(minus, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(0.5 * trace, im), Complex64::new(0.5 * trace, -im))
    }
}

/// Eigenvector `(u2 / (r1 - mu), 1)`, switching to the second Jacobian row
/// where `r1 - mu` vanishes.
fn eigenvector(r1: f64, r2: f64, u1: f64, u2: f64, mu: Complex64) -> [Complex64; 2] {
    let one = Complex64::new(1.0, 0.0);
    let scale = r1.abs() + r2.abs() + u1.abs() + u2.abs();
    let d1 = Complex64::new(r1, 0.0) - mu;
    if d1.norm() > REL_TOL * scale {
        return [Complex64::new(u2, 0.0) / d1, one];
    }
    // row 2: -u1 v1 + (r2 - mu) v2 = 0
    if u1.abs() > REL_TOL * scale {
        return [(Complex64::new(r2, 0.0) - mu) / u1, one];
    }
    [one, Complex64::new(0.0, 0.0)]
}

/// Region label from the control product alone.
pub fn classify_region(r1: f64, r2: f64, u1: f64, u2: f64) -> Classification {
    let prod = u1 * u2;
    let upper = r1 * r2;
    let lower = -(r1 - r2) * (r1 - r2) / 4.0;
    let tol = REL_TOL * (upper.abs() + lower.abs() + prod.abs());
    if (prod - upper).abs() <= tol || (prod - lower).abs() <= tol {
        Classification::Degenerate
    } else if prod > upper {
        Classification::Saddle
    } else if prod > lower {
        Classification::UnstableNode
    } else {
        Classification::UnstableSpiral
    }
}

/// Label recomputed from eigenvalue signs and complexity.
pub fn classify_eigenvalues(mu_plus: Complex64, mu_minus: Complex64) -> Classification {
    let scale = mu_plus.norm().max(mu_minus.norm()).max(f64::MIN_POSITIVE);
    let tol = REL_TOL * scale;
    let real = mu_plus.im.abs() <= tol && mu_minus.im.abs() <= tol;
    if real {
        let (a, b) = (mu_plus.re, mu_minus.re);
        if a.abs() <= tol || b.abs() <= tol || (a - b).abs() <= tol {
            Classification::Degenerate
        } else if a * b < 0.0 {
            Classification::Saddle
        } else if a > 0.0 && b > 0.0 {
            Classification::UnstableNode
        } else {
            Classification::Degenerate
        }
    } else if mu_plus.re > tol {
        Classification::UnstableSpiral
    } else {
        Classification::Degenerate
    }
}

/// Full eigenstructure report for frozen controls `u1, u2`.
///
/// Control values are not restricted to the admissible box here, so the
/// spiral region (negative products) can be explored as well.
pub fn classify_adjoint_equilibrium(p: &ModelParams, u1: f64, u2: f64) -> EquilibriumReport {
    let (r1, r2) = (p.r1, p.r2);
    let (mu_plus, mu_minus) = adjoint_eigenvalues(r1, r2, u1, u2);
    EquilibriumReport {
        point: adjoint_equilibrium(p, u1, u2).ok(),
        mu_plus,
        mu_minus,
        v: eigenvector(r1, r2, u1, u2, mu_plus),
        w: eigenvector(r1, r2, u1, u2, mu_minus),
        classification: classify_region(r1, r2, u1, u2),
    }
}
