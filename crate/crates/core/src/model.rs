//! Problem definition: parameters, dynamics, payoff, Hamiltonian and the
//! pointwise optimal control law.
//!
//! Each spouse's positivity relaxes towards a natural disposition and is
//! pushed by the partner's positivity through an influence term `u_i * x_j`:
//!
//! ```text
//! x1' = r1 (xbar1 - x1) + u1 x2
//! x2' = r2 (xbar2 - x2) + u2 x1
//! ```
//!
//! The couple maximizes the shared payoff
//! `F = alpha [x1 - (u1 - u0)^2 / (2 eps)] + (1 - alpha) [x2 - (u2 - u0)^2 / (2 eps)]`
//! with `0 <= u_i <= u_i,max`. When `eps` is infinite the cost terms vanish and
//! the controls become bang-bang.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::solver::Trajectory;

/// Cost scale of non-ideal interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    Finite(f64),
    /// The linear problem: interaction carries no emotional cost.
    Infinite,
}

impl Epsilon {
    pub fn is_infinite(self) -> bool {
        matches!(self, Epsilon::Infinite)
    }

    /// `1 / (2 eps)`, which is zero for the infinite case.
    pub fn cost_weight(self) -> f64 {
        match self {
            Epsilon::Finite(e) => 0.5 / e,
            Epsilon::Infinite => 0.0,
        }
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::Finite(e) => write!(f, "{e}"),
            Epsilon::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for Epsilon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Epsilon::Finite(e) => s.serialize_f64(*e),
            Epsilon::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct EpsVisitor;

        impl Visitor<'_> for EpsVisitor {
            type Value = Epsilon;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number or the string \"infinite\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Epsilon, E> {
                Ok(Epsilon::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Epsilon, E> {
                Ok(Epsilon::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Epsilon, E> {
                Ok(Epsilon::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Epsilon, E> {
                match v {
                    "infinite" | "inf" | "Infinite" => Ok(Epsilon::Infinite),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        d.deserialize_any(EpsVisitor)
    }
}

/// All problem constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Return rate of spouse 1 towards their natural disposition.
    pub r1: f64,
    pub r2: f64,
    /// Natural disposition of spouse 1.
    pub xbar1: f64,
    pub xbar2: f64,
    /// Weight of spouse 1 in the shared payoff.
    pub alpha: f64,
    pub epsilon: Epsilon,
    /// Ideal, cost-free interaction level.
    pub u0: f64,
    pub u1max: f64,
    pub u2max: f64,
    /// Terminal time.
    #[serde(rename = "T")]
    pub horizon: f64,
    pub x1_0: f64,
    pub x2_0: f64,
}

impl ModelParams {
    /// Checks every parameter invariant, naming the first violated key.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("r1", self.r1),
            ("r2", self.r2),
            ("xbar1", self.xbar1),
            ("xbar2", self.xbar2),
            ("alpha", self.alpha),
            ("u0", self.u0),
            ("u1max", self.u1max),
            ("u2max", self.u2max),
            ("T", self.horizon),
            ("x1_0", self.x1_0),
            ("x2_0", self.x2_0),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(invalid(key, format!("must be finite, got {v}")));
            }
        }
        let positive = [
            ("r1", self.r1),
            ("r2", self.r2),
            ("u1max", self.u1max),
            ("u2max", self.u2max),
            ("T", self.horizon),
        ];
        for (key, v) in positive {
            if v <= 0.0 {
                return Err(invalid(key, format!("must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {}", self.alpha)));
        }
        if let Epsilon::Finite(e) = self.epsilon {
            if !(e.is_finite() && e > 0.0) {
                return Err(invalid("epsilon", format!("must be > 0 or \"infinite\", got {e}")));
            }
        }
        if self.u0 < 0.0 {
            return Err(invalid("u0", format!("must be >= 0, got {}", self.u0)));
        }
        let umin = self.u1max.min(self.u2max);
        if self.u0 > umin {
            return Err(invalid(
                "u0",
                format!("must not exceed min(u1max, u2max) = {umin}, got {}", self.u0),
            ));
        }
        Ok(())
    }

    pub fn state_rhs(&self, s: StateVec, u: ControlVec) -> StateVec {
        StateVec {
            x1: self.r1 * (self.xbar1 - s.x1) + u.u1 * s.x2,
            x2: self.r2 * (self.xbar2 - s.x2) + u.u2 * s.x1,
        }
    }

    /// Costate dynamics `lam' = -dH/dx`. They do not depend on the state.
    pub fn adjoint_rhs(&self, lam: AdjointVec, u: ControlVec) -> AdjointVec {
        AdjointVec {
            lam1: -self.alpha + lam.lam1 * self.r1 - lam.lam2 * u.u2,
            lam2: -(1.0 - self.alpha) - lam.lam1 * u.u1 + lam.lam2 * self.r2,
        }
    }

    /// Pointwise maximizer of the Hamiltonian over the control box.
    ///
    /// A spouse whose own cost term is switched off (infinite epsilon, or a
    /// zero weight in the payoff) follows the bang-bang law on the sign of
    /// their switching function, with a zero switching function mapped to 0.
    /// Everyone else uses the stationary point of the Hamiltonian, clamped
    /// into `[0, u_max]`.
    pub fn control_law(&self, s: StateVec, lam: AdjointVec) -> ControlVec {
        let (psi1, psi2) = switching_functions(s, lam);
        match self.epsilon {
            Epsilon::Infinite => ControlVec {
                u1: bang_bang(psi1, self.u1max),
                u2: bang_bang(psi2, self.u2max),
            },
            Epsilon::Finite(eps) => {
                let a = self.alpha;
                let u1 = if a == 0.0 {
                    bang_bang(psi1, self.u1max)
                } else {
                    (eps / a * psi1 + self.u0).clamp(0.0, self.u1max)
                };
                let u2 = if a == 1.0 {
                    bang_bang(psi2, self.u2max)
                } else {
                    (eps / (1.0 - a) * psi2 + self.u0).clamp(0.0, self.u2max)
                };
                ControlVec { u1, u2 }
            }
        }
    }

    /// Payoff integrand `F`.
    pub fn running_payoff(&self, s: StateVec, u: ControlVec) -> f64 {
        let w = self.epsilon.cost_weight();
        let d1 = u.u1 - self.u0;
        let d2 = u.u2 - self.u0;
        self.alpha * (s.x1 - w * d1 * d1) + (1.0 - self.alpha) * (s.x2 - w * d2 * d2)
    }

    pub fn hamiltonian(&self, s: StateVec, u: ControlVec, lam: AdjointVec) -> f64 {
        let f = self.state_rhs(s, u);
        self.running_payoff(s, u) + lam.lam1 * f.x1 + lam.lam2 * f.x2
    }

    /// Clamps a control pair into the admissible box.
    pub fn clamp_controls(&self, u: ControlVec) -> ControlVec {
        ControlVec {
            u1: u.u1.clamp(0.0, self.u1max),
            u2: u.u2.clamp(0.0, self.u2max),
        }
    }

    pub fn initial_state(&self) -> StateVec {
        StateVec {
            x1: self.x1_0,
            x2: self.x2_0,
        }
    }

    /// Upper bound of spouse `i`'s control (`i` is 1 or 2).
    pub fn umax(&self, spouse: Spouse) -> f64 {
        match spouse {
            Spouse::One => self.u1max,
            Spouse::Two => self.u2max,
        }
    }
}

fn bang_bang(psi: f64, umax: f64) -> f64 {
    if psi > 0.0 {
        umax
    } else {
        0.0
    }
}

/// Switching functions `(lam1 x2, lam2 x1)`: the coefficients of the
/// controls in the Hamiltonian.
pub fn switching_functions(s: StateVec, lam: AdjointVec) -> (f64, f64) {
    (lam.lam1 * s.x2, lam.lam2 * s.x1)
}

/// Payoff `J` of a trajectory by the composite trapezoid rule on its grid.
pub fn objective(p: &ModelParams, traj: &Trajectory) -> Result<f64> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::InvalidTrajectory(format!(
            "objective needs at least 3 nodes, got {n}"
        )));
    }
    traj.check_shape()?;
    let h = traj.grid.step();
    let f = |k: usize| p.running_payoff(traj.state(k), traj.control(k));
    let interior: f64 = (1..n - 1).map(f).sum();
    Ok(h * (0.5 * (f(0) + f(n - 1)) + interior))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVec {
    pub x1: f64,
    pub x2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdjointVec {
    pub lam1: f64,
    pub lam2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlVec {
    pub u1: f64,
    pub u2: f64,
}

/// Which spouse an analysis refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spouse {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Spouse {
    pub const BOTH: [Spouse; 2] = [Spouse::One, Spouse::Two];

    pub fn index(self) -> usize {
        match self {
            Spouse::One => 1,
            Spouse::Two => 2,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Example 1 parameters of the shipped scenarios.
    pub(crate) fn example1() -> ModelParams {
        ModelParams {
            r1: 0.82,
            r2: 0.82,
            xbar1: 0.2,
            xbar2: 0.4,
            alpha: 1.0,
            epsilon: Epsilon::Infinite,
            u0: 0.0,
            u1max: 0.5,
            u2max: 0.5,
            horizon: 10.0,
            x1_0: -0.2,
            x2_0: -0.4,
        }
    }

    pub(crate) fn example2(eps: f64) -> ModelParams {
        ModelParams {
            r1: 0.82,
            r2: 0.82,
            xbar1: 0.26,
            xbar2: 0.26,
            alpha: 0.5,
            epsilon: Epsilon::Finite(eps),
            u0: 0.3,
            u1max: 0.5,
            u2max: 0.5,
            horizon: 3.0,
            x1_0: -0.26,
            x2_0: -0.26,
        }
    }

    fn s(x1: f64, x2: f64) -> StateVec {
        StateVec { x1, x2 }
    }

    fn l(lam1: f64, lam2: f64) -> AdjointVec {
        AdjointVec { lam1, lam2 }
    }

    fn c(u1: f64, u2: f64) -> ControlVec {
        ControlVec { u1, u2 }
    }

    #[test]
    fn state_rhs_at_disposition_is_zero() {
        let p = example1();
        let d = p.state_rhs(s(0.2, 1.7), c(0.0, 0.0));
        assert_eq!(d.x1, 0.0);
    }

    #[test]
    fn state_rhs_hand_value() {
        let p = example1();
        let d = p.state_rhs(s(-0.2, -0.4), c(0.5, 0.0));
        assert!((d.x1 - 0.128).abs() < 1e-15);
    }

    #[test]
    fn state_rhs_symmetric() {
        let mut p = example1();
        p.xbar2 = p.xbar1;
        let d = p.state_rhs(s(0.3, 0.3), c(0.4, 0.4));
        assert_eq!(d.x1, d.x2);
    }

    #[test]
    fn adjoint_rhs_zero_adjoint() {
        let mut p = example1();
        p.alpha = 0.5;
        let d = p.adjoint_rhs(l(0.0, 0.0), c(0.3, 0.2));
        assert_eq!((d.lam1, d.lam2), (-0.5, -0.5));
    }

    #[test]
    fn adjoint_rhs_hand_value() {
        let p = example1();
        let d = p.adjoint_rhs(l(1.0, 0.0), c(0.5, 0.5));
        assert!((d.lam1 + 0.18).abs() < 1e-15);
        assert!((d.lam2 + 0.5).abs() < 1e-15);
    }

    #[test]
    fn switching_function_values() {
        assert_eq!(switching_functions(s(2.0, 3.0), l(1.0, 1.0)), (3.0, 2.0));
        assert_eq!(switching_functions(s(2.0, 3.0), l(0.0, 0.0)), (0.0, 0.0));
        let (psi1, _) = switching_functions(s(1.0, -2.0), l(0.5, 1.0));
        assert!(psi1 < 0.0);
    }

    #[test]
    fn bang_bang_law() {
        let p = example1();
        assert_eq!(p.control_law(s(0.0, -0.4), l(0.3, 0.0)).u1, 0.0);
        assert_eq!(p.control_law(s(0.0, 0.4), l(0.3, 0.0)).u1, 0.5);
        // tie maps to zero
        assert_eq!(p.control_law(s(0.0, 0.0), l(0.3, 1.0)).u1, 0.0);
    }

    #[test]
    fn interior_law_hand_value() {
        let mut p = example2(0.1);
        p.alpha = 0.5;
        let u = p.control_law(s(0.0, 0.5), l(0.1, 0.0));
        assert!((u.u1 - 0.31).abs() < 1e-15);
    }

    #[test]
    fn altruist_regimes_dispatch() {
        let mut p = example2(0.1);
        p.alpha = 0.0;
        let u = p.control_law(s(0.2, 0.4), l(0.5, 0.5));
        assert_eq!(u.u1, 0.5);
        assert!((u.u2 - (0.1 * 0.5 * 0.2 + 0.3)).abs() < 1e-15);
        p.alpha = 1.0;
        let u = p.control_law(s(0.2, 0.4), l(0.5, 0.5));
        assert!((u.u1 - (0.1 * 0.5 * 0.4 + 0.3)).abs() < 1e-15);
        assert_eq!(u.u2, 0.5);
    }

    #[test]
    fn payoff_values() {
        let p = example2(0.1);
        let f = p.running_payoff(s(0.7, 0.1), c(p.u0, p.u0));
        assert!((f - (0.5 * 0.7 + 0.5 * 0.1)).abs() < 1e-15);
        let f = p.running_payoff(s(1.0, 1.0), c(0.5, 0.5));
        assert!((f - 0.8).abs() < 1e-12);
        let q = example1();
        assert_eq!(q.running_payoff(s(0.7, 0.1), c(0.5, 0.0)), 0.7);
    }

    #[test]
    fn hamiltonian_with_zero_adjoint_is_payoff() {
        let p = example2(0.1);
        let (st, u) = (s(0.3, -0.2), c(0.1, 0.45));
        assert_eq!(p.hamiltonian(st, u, l(0.0, 0.0)), p.running_payoff(st, u));
    }

    #[test]
    fn hamiltonian_affine_for_infinite_epsilon() {
        let p = example1();
        let (st, lam) = (s(0.3, -0.2), l(0.7, 1.1));
        let h = |u1: f64| p.hamiltonian(st, c(u1, 0.2), lam);
        let second = h(0.4) - 2.0 * h(0.25) + h(0.1);
        assert!(second.abs() < 1e-15);
    }

    #[test]
    fn interior_control_is_stationary() {
        let p = example2(0.1);
        let (st, lam) = (s(0.3, 0.4), l(0.6, 0.8));
        let u = p.control_law(st, lam);
        assert!(u.u1 > 0.0 && u.u1 < p.u1max && u.u2 > 0.0 && u.u2 < p.u2max);
        let dh = 1e-5;
        let g1 = (p.hamiltonian(st, c(u.u1 + dh, u.u2), lam)
            - p.hamiltonian(st, c(u.u1 - dh, u.u2), lam))
            / (2.0 * dh);
        let g2 = (p.hamiltonian(st, c(u.u1, u.u2 + dh), lam)
            - p.hamiltonian(st, c(u.u1, u.u2 - dh), lam))
            / (2.0 * dh);
        assert!(g1.abs() < 1e-10, "{g1}");
        assert!(g2.abs() < 1e-10, "{g2}");
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut p = example1();
        assert!(p.validate().is_ok());
        p.alpha = 1.5;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { key: "alpha", .. })));
        let mut p = example2(0.1);
        p.u0 = 0.6;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { key: "u0", .. })));
        p.u0 = 0.3;
        p.epsilon = Epsilon::Finite(0.0);
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { key: "epsilon", .. })));
        p.epsilon = Epsilon::Finite(0.1);
        p.r2 = -1.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { key: "r2", .. })));
    }

    #[test]
    fn epsilon_serde() {
        let e: Epsilon = serde_json::from_str("\"infinite\"").unwrap();
        assert_eq!(e, Epsilon::Infinite);
        let e: Epsilon = serde_json::from_str("0.25").unwrap();
        assert_eq!(e, Epsilon::Finite(0.25));
        assert_eq!(serde_json::to_string(&Epsilon::Infinite).unwrap(), "\"infinite\"");
        assert!(serde_json::from_str::<Epsilon>("\"big\"").is_err());
    }
}
