mod common;

use marriage_oc::model::objective;
use marriage_oc::solver::{forward_sweep, update_controls, AdjointArrays, ControlArrays, StateArrays};
use marriage_oc::{fbs_solve, Grid, SolverConfig, Trajectory};
use proptest::prelude::*;
use rand::RngExt;

#[test]
fn boundary_data_is_pinned_exactly() {
    let mut rng = common::rng(11);
    for i in 0..60 {
        let alpha = [0.0, 0.5, 1.0][i % 3];
        let p = common::random_params(&mut rng, alpha);
        let r = fbs_solve(&p, &SolverConfig::default().with_steps(200)).unwrap();
        let t = &r.trajectory;
        let n = t.len() - 1;
        assert_eq!((t.x1[0], t.x2[0]), (p.x1_0, p.x2_0));
        assert_eq!((t.lam1[n], t.lam2[n]), (0.0, 0.0));
        assert!(r.iterations <= 500);
        assert!(t.u1.iter().all(|u| (0.0..=p.u1max).contains(u)));
        assert!(t.u2.iter().all(|u| (0.0..=p.u2max).contains(u)));
    }
}

proptest! {
    #[test]
    fn every_control_update_is_admissible(
        seed in any::<u64>(), theta in 0.01..=1.0f64, alpha in prop::sample::select(vec![0.0, 0.3, 0.5, 1.0])
    ) {
        let mut rng = common::rng(seed);
        let p = common::random_params(&mut rng, alpha);
        let n = 20;
        let mut draw = |lo: f64, hi: f64| (0..n).map(|_| rng.random_range(lo..hi)).collect::<Vec<f64>>();
        let states = StateArrays { x1: draw(-2.0, 2.0), x2: draw(-2.0, 2.0) };
        let adjoints = AdjointArrays { lam1: draw(-2.0, 2.0), lam2: draw(-2.0, 2.0) };
        let old = ControlArrays { u1: draw(0.0, p.u1max), u2: draw(0.0, p.u2max) };
        let new = update_controls(&p, &states, &adjoints, &old, theta);
        prop_assert!(new.u1.iter().all(|u| (0.0..=p.u1max).contains(u)));
        prop_assert!(new.u2.iter().all(|u| (0.0..=p.u2max).contains(u)));
    }
}

fn payoff_of(p: &marriage_oc::ModelParams, grid: Grid, u: ControlArrays) -> f64 {
    let x = forward_sweep(p, &grid, &u).unwrap();
    let n = grid.len();
    let lam = AdjointArrays {
        lam1: vec![0.0; n],
        lam2: vec![0.0; n],
    };
    objective(p, &Trajectory::from_parts(grid, x, lam, u).unwrap()).unwrap()
}

#[test]
fn converged_solution_is_locally_optimal() {
    for (eps, alpha) in [(0.1, 0.5), (0.05, 0.3)] {
        let p = marriage_oc::ModelParams {
            alpha,
            ..common::example2(eps)
        };
        let r = fbs_solve(&p, &SolverConfig::default().with_tolerance(1e-10)).unwrap();
        assert!(r.converged);
        let grid = r.trajectory.grid;
        let base = payoff_of(&p, grid, r.trajectory.controls());
        assert!((base - r.objective_value).abs() < 1e-12);
        let mut rng = common::rng(13);
        for _ in 0..100 {
            let mut u = r.trajectory.controls();
            for v in u.u1.iter_mut() {
                *v = (*v + rng.random_range(-0.01..0.01)).clamp(0.0, p.u1max);
            }
            for v in u.u2.iter_mut() {
                *v = (*v + rng.random_range(-0.01..0.01)).clamp(0.0, p.u2max);
            }
            let j = payoff_of(&p, grid, u);
            assert!(j <= base + 1e-6, "perturbed {j} > optimal {base}");
        }
    }
}

#[test]
fn smooth_perturbations_do_not_improve_the_payoff() {
    let p = common::example2(0.1);
    let r = fbs_solve(&p, &SolverConfig::default().with_tolerance(1e-10)).unwrap();
    let grid = r.trajectory.grid;
    let base = r.objective_value;
    for (a, b) in [(0.01, 0.0), (-0.01, 0.0), (0.0, 0.01), (0.0, -0.01), (0.01, -0.01)] {
        let mut u = r.trajectory.controls();
        for (k, t) in grid.times().enumerate() {
            let bump = (std::f64::consts::PI * t / p.horizon).sin();
            u.u1[k] = (u.u1[k] + a * bump).clamp(0.0, p.u1max);
            u.u2[k] = (u.u2[k] + b * bump).clamp(0.0, p.u2max);
        }
        assert!(payoff_of(&p, grid, u) <= base + 1e-6);
    }
}
