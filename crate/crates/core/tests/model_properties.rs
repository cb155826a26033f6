mod common;

use marriage_oc::model::switching_functions;
use marriage_oc::{AdjointVec, ControlVec, Epsilon, ModelParams, StateVec};
use proptest::prelude::*;
use rand::RngExt;

fn params_strategy(finite: bool) -> impl Strategy<Value = ModelParams> {
    (
        (0.1..2.0f64, 0.1..2.0f64, -1.0..1.0f64, -1.0..1.0f64),
        (0.01..0.99f64, 0.01..2.0f64, 0.1..1.0f64, 0.1..1.0f64),
        (0.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
    )
        .prop_map(move |((r1, r2, xbar1, xbar2), (alpha, eps, u1max, u2max), (f, x1_0, x2_0))| ModelParams {
            r1,
            r2,
            xbar1,
            xbar2,
            alpha,
            epsilon: if finite { Epsilon::Finite(eps) } else { Epsilon::Infinite },
            u0: f * u1max.min(u2max),
            u1max,
            u2max,
            horizon: 1.0,
            x1_0,
            x2_0,
        })
}

fn vec2() -> impl Strategy<Value = (f64, f64)> {
    (-3.0..3.0f64, -3.0..3.0f64)
}

#[test]
fn control_law_is_admissible_for_a_million_draws() {
    let mut rng = common::rng(7);
    for i in 0..1_000_000u32 {
        let alpha = match i % 4 {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        };
        let mut p = common::random_params(&mut rng, alpha);
        if i % 5 == 0 {
            p.epsilon = Epsilon::Infinite;
        }
        let s = StateVec {
            x1: rng.random_range(-5.0..5.0),
            x2: rng.random_range(-5.0..5.0),
        };
        let lam = AdjointVec {
            lam1: rng.random_range(-5.0..5.0),
            lam2: rng.random_range(-5.0..5.0),
        };
        let u = p.control_law(s, lam);
        assert!((0.0..=p.u1max).contains(&u.u1), "{p:?} {u:?}");
        assert!((0.0..=p.u2max).contains(&u.u2), "{p:?} {u:?}");
    }
}

proptest! {
    #[test]
    fn infinite_epsilon_is_bang_bang(p in params_strategy(false), s in vec2(), l in vec2()) {
        let s = StateVec { x1: s.0, x2: s.1 };
        let lam = AdjointVec { lam1: l.0, lam2: l.1 };
        let (psi1, psi2) = switching_functions(s, lam);
        let u = p.control_law(s, lam);
        if psi1 != 0.0 {
            prop_assert!(u.u1 == 0.0 || u.u1 == p.u1max);
        }
        if psi2 != 0.0 {
            prop_assert!(u.u2 == 0.0 || u.u2 == p.u2max);
        }
    }

    #[test]
    fn hamiltonian_is_maximized_on_the_control_grid(p in params_strategy(true), s in vec2(), l in vec2()) {
        let s = StateVec { x1: s.0, x2: s.1 };
        let lam = AdjointVec { lam1: l.0, lam2: l.1 };
        let best = p.hamiltonian(s, p.control_law(s, lam), lam);
        for i in 0..=100 {
            for j in 0..=100 {
                let u = ControlVec { u1: p.u1max * i as f64 / 100.0, u2: p.u2max * j as f64 / 100.0 };
                prop_assert!(p.hamiltonian(s, u, lam) <= best + 1e-9);
            }
        }
    }

    #[test]
    fn dynamics_are_affine_in_each_argument(
        p in params_strategy(true), s in vec2(), l in vec2(), u in (0.0..1.0f64, 0.0..1.0f64), d in vec2()
    ) {
        let h = 0.1;
        let st = |a: f64| StateVec { x1: s.0 + a * d.0, x2: s.1 + a * d.1 };
        let ad = |a: f64| AdjointVec { lam1: l.0 + a * d.0, lam2: l.1 + a * d.1 };
        let ct = |a: f64| ControlVec { u1: u.0 + a * d.0, u2: u.1 + a * d.1 };
        let c0 = ct(0.0);
        let second = |f: &dyn Fn(f64) -> [f64; 2]| {
            let (a, b, c) = (f(-h), f(0.0), f(h));
            [a[0] - 2.0 * b[0] + c[0], a[1] - 2.0 * b[1] + c[1]]
        };
        let checks = [
            second(&|a| { let v = p.state_rhs(st(a), c0); [v.x1, v.x2] }),
            second(&|a| { let v = p.state_rhs(st(0.0), ct(a)); [v.x1, v.x2] }),
            second(&|a| { let v = p.adjoint_rhs(ad(a), c0); [v.lam1, v.lam2] }),
            second(&|a| { let v = p.adjoint_rhs(ad(0.0), ct(a)); [v.lam1, v.lam2] }),
        ];
        for c in checks {
            prop_assert!(c[0].abs() < 1e-9 && c[1].abs() < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn ideal_interaction_payoff_ignores_epsilon(p in params_strategy(true), s in vec2(), eps in 0.001..100.0f64) {
        let s = StateVec { x1: s.0, x2: s.1 };
        let u = ControlVec { u1: p.u0, u2: p.u0 };
        let a = p.running_payoff(s, u);
        let b = ModelParams { epsilon: Epsilon::Finite(eps), ..p }.running_payoff(s, u);
        let c = ModelParams { epsilon: Epsilon::Infinite, ..p }.running_payoff(s, u);
        prop_assert_eq!(a, b);
        prop_assert_eq!(a, c);
    }
}
