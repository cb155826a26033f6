//! Small-epsilon expansion of the necessary conditions.
//!
//! Writing `x = x_0 + eps x_1 + ...` (and likewise for the adjoints) and
//! collecting powers of `eps`:
//!
//! * order 0 is a linear constant-coefficient system in which both spouses
//!   respond with the fixed level `u0`. Its solution is available in closed
//!   form, with state rates `eta` and adjoint rates `rho = -eta`;
//! * order 1 is the same linear operator driven by quadratic forcing built
//!   from the order-0 solution. It is integrated numerically with RK4, the
//!   forcing evaluated at exact stage times.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AdjointVec, Epsilon, ModelParams, StateVec};
use crate::rk4;
use crate::solver::{Grid, Trajectory};

/// Closed-form solution of the order-0 system.
///
/// ```text
/// x_0(t)   = a1 v1 e^{eta1 t}     + a2 v2 e^{eta2 t}     + xp
/// lam_0(t) = b1 w1 e^{rho1 (t-T)} + b2 w2 e^{rho2 (t-T)} + lp
/// ```
///
/// The adjoint modes are anchored at the horizon so `b1, b2` stay bounded
/// for long horizons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZerothOrderSolution {
    pub eta1: f64,
    pub eta2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub state_modes: [[f64; 2]; 2],
    pub adjoint_modes: [[f64; 2]; 2],
    pub state_particular: [f64; 2],
    pub adjoint_particular: [f64; 2],
    pub horizon: f64,
}

/// Eigenvector of `[[d1, c], [c, d2]]`-type 2x2 systems for eigenvalue
/// `shift`: either `(c, shift_row1)` or `(shift_row2, c)`, whichever is
/// better conditioned. The first form is zero when `c = 0` and the
/// eigenvalue belongs to the first row.
fn mode_vector(c: f64, row1: f64, row2: f64) -> [f64; 2] {
    let first = [c, row1];
    let second = [row2, c];
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    if norm(first) >= norm(second) {
        first
    } else {
        second
    }
}

/// Solves `[m0 m1] (c0, c1)^T = rhs` for 2-vectors `m0, m1`.
fn solve2(m0: [f64; 2], m1: [f64; 2], rhs: [f64; 2]) -> Option<(f64, f64)> {
    let det = m0[0] * m1[1] - m1[0] * m0[1];
    let scale = m0[0].hypot(m0[1]) * m1[0].hypot(m1[1]);
    if det.abs() <= 1e-14 * scale || scale == 0.0 {
        return None;
    }
    Some((
        (rhs[0] * m1[1] - m1[0] * rhs[1]) / det,
        (m0[0] * rhs[1] - rhs[0] * m0[1]) / det,
    ))
}

impl ZerothOrderSolution {
    pub fn state(&self, t: f64) -> StateVec {
        let e1 = self.a1 * (self.eta1 * t).exp();
        let e2 = self.a2 * (self.eta2 * t).exp();
        let [v1, v2] = self.state_modes;
        StateVec {
            x1: e1 * v1[0] + e2 * v2[0] + self.state_particular[0],
            x2: e1 * v1[1] + e2 * v2[1] + self.state_particular[1],
        }
    }

    pub fn state_derivative(&self, t: f64) -> StateVec {
        let e1 = self.a1 * self.eta1 * (self.eta1 * t).exp();
        let e2 = self.a2 * self.eta2 * (self.eta2 * t).exp();
        let [v1, v2] = self.state_modes;
        StateVec {
            x1: e1 * v1[0] + e2 * v2[0],
            x2: e1 * v1[1] + e2 * v2[1],
        }
    }

    pub fn adjoint(&self, t: f64) -> AdjointVec {
        let s = t - self.horizon;
        let e1 = self.b1 * (self.rho1 * s).exp();
        let e2 = self.b2 * (self.rho2 * s).exp();
        let [w1, w2] = self.adjoint_modes;
        AdjointVec {
            lam1: e1 * w1[0] + e2 * w2[0] + self.adjoint_particular[0],
            lam2: e1 * w1[1] + e2 * w2[1] + self.adjoint_particular[1],
        }
    }

    pub fn adjoint_derivative(&self, t: f64) -> AdjointVec {
        let s = t - self.horizon;
        let e1 = self.b1 * self.rho1 * (self.rho1 * s).exp();
        let e2 = self.b2 * self.rho2 * (self.rho2 * s).exp();
        let [w1, w2] = self.adjoint_modes;
        AdjointVec {
            lam1: e1 * w1[0] + e2 * w2[0],
            lam2: e1 * w1[1] + e2 * w2[1],
        }
    }
}

/// Closed-form order-0 solution.
pub fn zeroth_solve(p: &ModelParams) -> Result<ZerothOrderSolution> {
    p.validate()?;
    let (r1, r2, u0) = (p.r1, p.r2, p.u0);
    let det = r1 * r2 - u0 * u0;
    if det.abs() <= 1e-12 * (r1 * r2).max(u0 * u0) {
        return Err(Error::Resonant(r1 * r2));
    }
    // (r1 + r2)^2 - 4 (r1 r2 - u0^2), written without cancellation
    let disc = (r1 - r2) * (r1 - r2) + 4.0 * u0 * u0;
    let sq = disc.sqrt();
    if sq <= 1e-12 * (r1 + r2) {
        return Err(Error::RepeatedEigenvalue(-0.5 * (r1 + r2)));
    }
    let eta1 = 0.5 * (-(r1 + r2) + sq);
    let eta2 = 0.5 * (-(r1 + r2) - sq);
    let rho1 = 0.5 * (r1 + r2 + sq);
    let rho2 = 0.5 * (r1 + r2 - sq);

    let state_particular = [
        (p.xbar1 * r1 * r2 + p.xbar2 * r2 * u0) / det,
        (r1 * r2 * p.xbar2 + r1 * p.xbar1 * u0) / det,
    ];
    let a = p.alpha;
    let adjoint_particular = [(u0 - u0 * a + a * r2) / det, (u0 * a + (1.0 - a) * r1) / det];

    let v1 = mode_vector(u0, r1 + eta1, r2 + eta1);
    let v2 = mode_vector(u0, r1 + eta2, r2 + eta2);
    let w1 = mode_vector(u0, r1 - rho1, r2 - rho1);
    let w2 = mode_vector(u0, r1 - rho2, r2 - rho2);

    let (a1, a2) = solve2(
        v1,
        v2,
        [p.x1_0 - state_particular[0], p.x2_0 - state_particular[1]],
    )
    .ok_or(Error::RepeatedEigenvalue(eta1))?;
    let (b1, b2) = solve2(w1, w2, [-adjoint_particular[0], -adjoint_particular[1]])
        .ok_or(Error::RepeatedEigenvalue(rho1))?;

    Ok(ZerothOrderSolution {
        eta1,
        eta2,
        rho1,
        rho2,
        a1,
        a2,
        b1,
        b2,
        state_modes: [v1, v2],
        adjoint_modes: [w1, w2],
        state_particular,
        adjoint_particular,
        horizon: p.horizon,
    })
}

/// Nodal values of the four expansion components of one order.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct OrderArrays {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub lam1: Vec<f64>,
    pub lam2: Vec<f64>,
}

impl OrderArrays {
    fn sample(z: &ZerothOrderSolution, g: &Grid) -> Self {
        let mut out = Self::default();
        for t in g.times() {
            let s = z.state(t);
            let l = z.adjoint(t);
            out.x1.push(s.x1);
            out.x2.push(s.x2);
            out.lam1.push(l.lam1);
            out.lam2.push(l.lam2);
        }
        out
    }
}

/// Integrates the order-1 correction: states forward from zero, adjoints
/// backward from zero, both driven by the order-0 closed form.
pub fn first_order_solve(p: &ModelParams, z: &ZerothOrderSolution, g: &Grid) -> Result<OrderArrays> {
    let a = p.alpha;
    if a <= 0.0 || a >= 1.0 {
        return Err(Error::AltruistRegime(a));
    }
    let (r1, r2, u0) = (p.r1, p.r2, p.u0);
    let n = g.len();
    let h = g.step();

    let state_forcing = |t: f64| {
        let s = z.state(t);
        let l = z.adjoint(t);
        [l.lam1 * s.x2 * s.x2 / a, l.lam2 * s.x1 * s.x1 / (1.0 - a)]
    };
    let adjoint_forcing = |t: f64| {
        let s = z.state(t);
        let l = z.adjoint(t);
        [-l.lam2 * l.lam2 * s.x1 / (1.0 - a), -l.lam1 * l.lam1 * s.x2 / a]
    };

    let mut out = OrderArrays {
        x1: Vec::with_capacity(n),
        x2: Vec::with_capacity(n),
        lam1: vec![0.0; n],
        lam2: vec![0.0; n],
    };

    let mut y = [0.0, 0.0];
    out.x1.push(0.0);
    out.x2.push(0.0);
    for k in 0..n - 1 {
        let t0 = g.time(k);
        y = rk4::step(y, h, |frac, y| {
            let f = state_forcing(t0 + frac * h);
            [-r1 * y[0] + u0 * y[1] + f[0], -r2 * y[1] + u0 * y[0] + f[1]]
        });
        check(y, "first-order forward", k + 1)?;
        out.x1.push(y[0]);
        out.x2.push(y[1]);
    }

    let mut y = [0.0, 0.0];
    for k in (0..n - 1).rev() {
        let t1 = g.time(k + 1);
        y = rk4::step(y, -h, |frac, y| {
            let f = adjoint_forcing(t1 - frac * h);
            [r1 * y[0] - u0 * y[1] + f[0], -u0 * y[0] + r2 * y[1] + f[1]]
        });
        check(y, "first-order backward", k)?;
        out.lam1[k] = y[0];
        out.lam2[k] = y[1];
    }
    Ok(out)
}

fn check(y: [f64; 2], sweep: &'static str, node: usize) -> Result<()> {
    if y[0].is_finite() && y[1].is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence { sweep, node })
    }
}

/// Expansion order used to assemble a [`PerturbationTrajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Order {
    Zeroth,
    First,
}

impl TryFrom<u8> for Order {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Order::Zeroth),
            1 => Ok(Order::First),
            _ => Err(crate::error::invalid("order", format!("must be 0 or 1, got {v}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTrajectory {
    pub order: Order,
    pub zeroth_solution: ZerothOrderSolution,
    pub zeroth: OrderArrays,
    pub first: Option<OrderArrays>,
    /// `x_0 + eps x_1` (and adjoints), with controls from the control law.
    pub assembled: Trajectory,
}

/// Assembles the truncated expansion on a grid.
pub fn perturbation_trajectory(p: &ModelParams, g: &Grid, order: Order) -> Result<PerturbationTrajectory> {
    let Epsilon::Finite(eps) = p.epsilon else {
        return Err(Error::InfiniteEpsilon);
    };
    let z = zeroth_solve(p)?;
    let zeroth = OrderArrays::sample(&z, g);
    let first = match order {
        Order::Zeroth => None,
        Order::First => Some(first_order_solve(p, &z, g)?),
    };
    let n = g.len();
    let combine = |base: &[f64], corr: Option<&Vec<f64>>| -> Vec<f64> {
        match corr {
            Some(c) => base.iter().zip(c).map(|(b, c)| b + eps * c).collect(),
            None => base.to_vec(),
        }
    };
    let x1 = combine(&zeroth.x1, first.as_ref().map(|f| &f.x1));
    let x2 = combine(&zeroth.x2, first.as_ref().map(|f| &f.x2));
    let lam1 = combine(&zeroth.lam1, first.as_ref().map(|f| &f.lam1));
    let lam2 = combine(&zeroth.lam2, first.as_ref().map(|f| &f.lam2));
    let mut u1 = Vec::with_capacity(n);
    let mut u2 = Vec::with_capacity(n);
    for k in 0..n {
        let u = p.control_law(
            StateVec { x1: x1[k], x2: x2[k] },
            AdjointVec {
                lam1: lam1[k],
                lam2: lam2[k],
            },
        );
        u1.push(u.u1);
        u2.push(u.u2);
    }
    let assembled = Trajectory {
        grid: *g,
        x1,
        x2,
        lam1,
        lam2,
        u1,
        u2,
    };
    Ok(PerturbationTrajectory {
        order,
        zeroth_solution: z,
        zeroth,
        first,
        assembled,
    })
}
