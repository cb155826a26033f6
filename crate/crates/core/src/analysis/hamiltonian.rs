use serde::{Deserialize, Serialize};

use crate::model::{AdjointVec, ModelParams, StateVec};

/// Hamiltonian maximized over the control box.
///
/// The control law is the box maximizer in every regime: the Hamiltonian
/// is separable in the two controls, and each part is either affine or a
/// concave parabola.
pub fn maximized_hamiltonian(p: &ModelParams, s: StateVec, lam: AdjointVec) -> f64 {
    p.hamiltonian(s, p.control_law(s, lam), lam)
}

/// Axis-aligned sampling box in the state plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBox {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub points: usize,
    pub negative_semidefinite: usize,
    pub fraction_negative_semidefinite: f64,
    /// Largest Hessian eigenvalue over all samples.
    pub max_eigenvalue: f64,
}

/// Eigenvalues at or below this count as non-positive.
pub const CONCAVITY_TOL: f64 = 1e-6;

/// Finite-difference step of the probe.
pub const PROBE_STEP: f64 = 1e-4;

/// Samples the Hessian of `x -> M(x, lam)` on a `samples x samples` grid
/// over `region` and reports how often it is negative semidefinite.
///
/// Diagnostic only: concavity of `M` in the state is a sufficient
/// condition for optimality, and it fails wherever a switching function
/// changes sign or an interior control responds to the state.
pub fn concavity_probe(p: &ModelParams, lam: AdjointVec, region: StateBox, samples: usize) -> ConcavityReport {
    let h = PROBE_STEP;
    let m = |x1: f64, x2: f64| maximized_hamiltonian(p, StateVec { x1, x2 }, lam);
    let axis = |(lo, hi): (f64, f64), i: usize| {
        if samples <= 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (samples - 1) as f64
        }
    };
    let n = samples.max(1);
    let mut nsd = 0;
    let mut max_eig = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            let (x1, x2) = (axis(region.x1, i), axis(region.x2, j));
            let c = m(x1, x2);
            let h11 = (m(x1 + h, x2) - 2.0 * c + m(x1 - h, x2)) / (h * h);
            let h22 = (m(x1, x2 + h) - 2.0 * c + m(x1, x2 - h)) / (h * h);
            let h12 = (m(x1 + h, x2 + h) - m(x1 + h, x2 - h) - m(x1 - h, x2 + h) + m(x1 - h, x2 - h))
                / (4.0 * h * h);
            let mean = 0.5 * (h11 + h22);
            let radius = (0.25 * (h11 - h22) * (h11 - h22) + h12 * h12).sqrt();
            let top = mean + radius;
            max_eig = max_eig.max(top);
            if top <= CONCAVITY_TOL {
                nsd += 1;
            }
        }
    }
    let points = n * n;
    ConcavityReport {
        points,
        negative_semidefinite: nsd,
        fraction_negative_semidefinite: nsd as f64 / points as f64,
        max_eigenvalue: max_eig,
    }
}
