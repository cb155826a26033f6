use crate::error::{Error, Result};
use crate::model::{AdjointVec, ControlVec, ModelParams, StateVec};
use crate::rk4;

use super::{AdjointArrays, ControlArrays, Grid, StateArrays};

/// Control at fraction `frac` of the step from node `from` to node `to`.
/// Midpoints get the average of the two nodal values.
#[inline]
fn stage_control(u: &ControlArrays, from: usize, to: usize, frac: f64) -> ControlVec {
    ControlVec {
        u1: (1.0 - frac) * u.u1[from] + frac * u.u1[to],
        u2: (1.0 - frac) * u.u2[from] + frac * u.u2[to],
    }
}

fn check_len(grid: &Grid, u: &ControlArrays) -> Result<()> {
    let n = grid.len();
    if u.u1.len() != n || u.u2.len() != n {
        return Err(Error::InvalidTrajectory(format!(
            "control arrays have lengths ({}, {}), grid needs {n}",
            u.u1.len(),
            u.u2.len()
        )));
    }
    Ok(())
}

/// Integrates the state system forward from the initial data.
pub fn forward_sweep(p: &ModelParams, grid: &Grid, u: &ControlArrays) -> Result<StateArrays> {
    check_len(grid, u)?;
    let n = grid.len();
    let h = grid.step();
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut y = [p.x1_0, p.x2_0];
    x1.push(y[0]);
    x2.push(y[1]);
    for k in 0..n - 1 {
        y = rk4::step(y, h, |frac, y| {
            let d = p.state_rhs(StateVec { x1: y[0], x2: y[1] }, stage_control(u, k, k + 1, frac));
            [d.x1, d.x2]
        });
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::Divergence {
                sweep: "forward",
                node: k + 1,
            });
        }
        x1.push(y[0]);
        x2.push(y[1]);
    }
    Ok(StateArrays { x1, x2 })
}

/// Integrates the adjoint system backward from `lam(T) = 0`.
pub fn backward_sweep(p: &ModelParams, grid: &Grid, u: &ControlArrays) -> Result<AdjointArrays> {
    check_len(grid, u)?;
    let n = grid.len();
    let h = grid.step();
    let mut lam1 = vec![0.0; n];
    let mut lam2 = vec![0.0; n];
    let mut y = [0.0, 0.0];
    for k in (0..n - 1).rev() {
        y = rk4::step(y, -h, |frac, y| {
            let d = p.adjoint_rhs(AdjointVec { lam1: y[0], lam2: y[1] }, stage_control(u, k + 1, k, frac));
            [d.lam1, d.lam2]
        });
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::Divergence {
                sweep: "backward",
                node: k,
            });
        }
        lam1[k] = y[0];
        lam2[k] = y[1];
    }
    Ok(AdjointArrays { lam1, lam2 })
}

/// Relaxed control update `theta * law + (1 - theta) * old`, clamped.
pub fn update_controls(
    p: &ModelParams,
    states: &StateArrays,
    adjoints: &AdjointArrays,
    old: &ControlArrays,
    theta: f64,
) -> ControlArrays {
    let n = old.u1.len();
    let mut out = ControlArrays {
        u1: Vec::with_capacity(n),
        u2: Vec::with_capacity(n),
    };
    for k in 0..n {
        let law = p.control_law(states.at(k), adjoints.at(k));
        let mixed = p.clamp_controls(ControlVec {
            u1: theta * law.u1 + (1.0 - theta) * old.u1[k],
            u2: theta * law.u2 + (1.0 - theta) * old.u2[k],
        });
        out.u1.push(mixed.u1);
        out.u2.push(mixed.u2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{example1, example2};

    fn zeros(g: &Grid) -> ControlArrays {
        ControlArrays::constant(g.len(), 0.0, 0.0)
    }

    #[test]
    fn zero_control_matches_decoupled_closed_form() {
        let p = example1();
        let g = Grid::new(1000, 10.0).unwrap();
        let x = forward_sweep(&p, &g, &zeros(&g)).unwrap();
        for (k, t) in g.times().enumerate() {
            let e1 = p.xbar1 + (p.x1_0 - p.xbar1) * (-p.r1 * t).exp();
            let e2 = p.xbar2 + (p.x2_0 - p.xbar2) * (-p.r2 * t).exp();
            assert!((x.x1[k] - e1).abs() < 1e-8);
            assert!((x.x2[k] - e2).abs() < 1e-8);
        }
    }

    #[test]
    fn equilibrium_initial_data_is_constant() {
        let mut p = example1();
        p.x1_0 = p.xbar1;
        p.x2_0 = p.xbar2;
        let g = Grid::new(100, 10.0).unwrap();
        let x = forward_sweep(&p, &g, &zeros(&g)).unwrap();
        assert!(x.x1.iter().all(|&v| v == p.xbar1));
        assert!(x.x2.iter().all(|&v| v == p.xbar2));
    }

    #[test]
    fn forward_sweep_is_fourth_order() {
        // Constant nonzero controls keep the midpoint average exact.
        let p = example1();
        let sol = |n: usize| {
            let g = Grid::new(n, 10.0).unwrap();
            forward_sweep(&p, &g, &ControlArrays::constant(g.len(), 0.5, 0.3)).unwrap()
        };
        let reference = sol(40 * 16);
        let err = |n: usize| {
            let x = sol(n);
            let stride = 40 * 16 / n;
            (0..=n)
                .map(|k| (x.x1[k] - reference.x1[k * stride]).abs().max((x.x2[k] - reference.x2[k * stride]).abs()))
                .fold(0.0, f64::max)
        };
        let ratio = err(40) / err(80);
        assert!((12.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn backward_sweep_matches_closed_form_adjoint() {
        let p = example1();
        let g = Grid::new(1000, 10.0).unwrap();
        let lam = backward_sweep(&p, &g, &zeros(&g)).unwrap();
        for (k, t) in g.times().enumerate() {
            let expect = (1.0 - (p.r1 * (t - p.horizon)).exp()) / p.r1;
            assert!((lam.lam1[k] - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn terminal_adjoint_is_exactly_zero() {
        let p = example2(0.1);
        let g = Grid::new(50, 3.0).unwrap();
        let lam = backward_sweep(&p, &g, &ControlArrays::constant(g.len(), 0.4, 0.2)).unwrap();
        assert_eq!(lam.lam1[50], 0.0);
        assert_eq!(lam.lam2[50], 0.0);
    }

    #[test]
    fn no_weight_no_first_adjoint() {
        let mut p = example1();
        p.alpha = 0.0;
        let g = Grid::new(1000, 10.0).unwrap();
        let lam = backward_sweep(&p, &g, &zeros(&g)).unwrap();
        assert!(lam.lam1.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn update_relaxation_cases() {
        let p = example1();
        let states = StateArrays {
            x1: vec![1.0, -1.0],
            x2: vec![1.0, 1.0],
        };
        let adjoints = AdjointArrays {
            lam1: vec![1.0, 1.0],
            lam2: vec![1.0, 1.0],
        };
        let old = ControlArrays::constant(2, 0.0, 0.0);
        let full = update_controls(&p, &states, &adjoints, &old, 1.0);
        assert_eq!(full.u1, vec![0.5, 0.5]);
        assert_eq!(full.u2, vec![0.5, 0.0]);
        let half = update_controls(&p, &states, &adjoints, &old, 0.5);
        assert_eq!(half.u1, vec![0.25, 0.25]);
        let fixed = update_controls(&p, &states, &adjoints, &full, 0.5);
        assert_eq!(fixed, full);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let p = example1();
        let g = Grid::new(10, 1.0).unwrap();
        let u = ControlArrays::constant(5, 0.0, 0.0);
        assert!(matches!(forward_sweep(&p, &g, &u), Err(Error::InvalidTrajectory(_))));
    }
}
