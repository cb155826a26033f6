mod common;

use marriage_oc::analysis::{
    adjoint_eigenvalues, adjoint_equilibrium, classify_adjoint_equilibrium, classify_eigenvalues,
    classify_region, concavity_probe, influence_samples, singularity_report, Classification, StateBox,
    SINGULAR_TOL,
};
use marriage_oc::{fbs_solve, AdjointVec, ControlVec, Epsilon, ModelParams, SolverConfig, Spouse};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::RngExt;

fn sorted(mut v: [Complex64; 2]) -> [Complex64; 2] {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

#[test]
fn eigenvalue_identities_against_nalgebra() {
    let mut rng = common::rng(21);
    for _ in 0..10_000 {
        let (r1, r2) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
        let (u1, u2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (mp, mm) = adjoint_eigenvalues(r1, r2, u1, u2);
        let tr = mp + mm;
        let det = mp * mm;
        assert!((tr.re - (r1 + r2)).abs() < 1e-12 && tr.im.abs() < 1e-12);
        assert!((det.re - (r1 * r2 - u1 * u2)).abs() < 1e-12 && det.im.abs() < 1e-12);

        let j = Matrix2::new(r1, -u2, -u1, r2);
        let ev = j.complex_eigenvalues();
        let ours = sorted([mp, mm]);
        let theirs = sorted([
            Complex64::new(ev[0].re, ev[0].im),
            Complex64::new(ev[1].re, ev[1].im),
        ]);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).norm() < 1e-9, "{ours:?} vs {theirs:?}");
        }

        let p = ModelParams { r1, r2, ..common::example1() };
        let rep = classify_adjoint_equilibrium(&p, u1, u2);
        if rep.classification != Classification::Degenerate {
            for (mu, v) in [(rep.mu_plus, rep.v), (rep.mu_minus, rep.w)] {
                let jv = [r1 * v[0] - u2 * v[1], -u1 * v[0] + r2 * v[1]];
                let scale = v[0].norm().max(v[1].norm());
                assert!(scale > 0.0);
                assert!((jv[0] - mu * v[0]).norm() < 1e-9 * scale.max(1.0));
                assert!((jv[1] - mu * v[1]).norm() < 1e-9 * scale.max(1.0));
            }
        }
    }
}

#[test]
fn region_labels_agree_with_eigenvalues() {
    let mut rng = common::rng(22);
    let mut compared = 0;
    for _ in 0..10_000 {
        let (r1, r2) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
        let (u1, u2) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let region = classify_region(r1, r2, u1, u2);
        if region == Classification::Degenerate {
            continue;
        }
        let (mp, mm) = adjoint_eigenvalues(r1, r2, u1, u2);
        assert_eq!(region, classify_eigenvalues(mp, mm), "r=({r1},{r2}) u=({u1},{u2})");
        compared += 1;
    }
    assert!(compared > 9_900);
}

#[test]
fn fixed_point_is_a_root_of_the_adjoint_system() {
    let mut rng = common::rng(23);
    for _ in 0..10_000 {
        let alpha = rng.random_range(0.0..1.0);
        let p = common::random_params(&mut rng, alpha);
        let (u1, u2) = (rng.random_range(0.0..p.u1max), rng.random_range(0.0..p.u2max));
        if let Ok(pt) = adjoint_equilibrium(&p, u1, u2) {
            let d = p.adjoint_rhs(pt, ControlVec { u1, u2 });
            let scale = 1.0f64.max(pt.lam1.abs()).max(pt.lam2.abs());
            assert!(d.lam1.abs() < 1e-10 * scale && d.lam2.abs() < 1e-10 * scale, "{d:?}");
        }
    }
}

#[test]
fn one_control_at_bound_gives_the_rates_as_eigenvalues() {
    let mut rng = common::rng(24);
    for _ in 0..1000 {
        let (r1, r2) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
        let umax = rng.random_range(0.1..1.0);
        for (u1, u2) in [(umax, 0.0), (0.0, umax)] {
            let (mp, mm) = adjoint_eigenvalues(r1, r2, u1, u2);
            assert_eq!(mp.im, 0.0);
            assert_eq!(mm.im, 0.0);
            let mut got = [mp.re, mm.re];
            let mut want = [r1, r2];
            got.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            assert_eq!(got, want);
        }
    }
}

#[test]
fn singular_flags_fire_only_on_constructed_witnesses() {
    let mut rng = common::rng(25);
    for _ in 0..10_000 {
        let alpha = rng.random_range(0.0..1.0);
        let mut p = common::random_params(&mut rng, alpha);
        p.epsilon = Epsilon::Infinite;
        let r = singularity_report(&p, SINGULAR_TOL);
        assert!(!r.u1_singular_capable && !r.u2_singular_capable && !r.u2_singular_capable_literal);
        assert!(!r.lambda_interval_zero_possible);
    }
    let witness = ModelParams {
        xbar1: 0.5,
        x1_0: 0.5,
        r2: 0.5,
        xbar2: -0.4,
        u2max: 0.4,
        ..common::example1()
    };
    assert!(singularity_report(&witness, SINGULAR_TOL).u1_singular_capable);
    let mirrored = ModelParams {
        xbar2: 0.5,
        x2_0: 0.5,
        r1: 0.5,
        xbar1: -0.4,
        u1max: 0.4,
        ..common::example1()
    };
    let r = singularity_report(&mirrored, SINGULAR_TOL);
    assert!(r.u2_singular_capable && !r.u1_singular_capable);
}

#[test]
fn influence_is_control_times_partner_state() {
    let p = common::example2(0.1);
    let r = fbs_solve(&p, &SolverConfig::default()).unwrap();
    let t = &r.trajectory;
    for (spouse, u, x) in [(Spouse::One, &t.u1, &t.x2), (Spouse::Two, &t.u2, &t.x1)] {
        let s = influence_samples(t, spouse);
        assert_eq!(s.len(), t.len());
        for (k, smp) in s.iter().enumerate() {
            assert_eq!(smp.influence, u[k] * x[k]);
            assert_eq!(smp.t, t.time(k));
        }
    }
}

#[test]
fn maximized_hamiltonian_is_affine_in_the_state_at_zero_costate() {
    let p = common::example2(0.1);
    let lam = AdjointVec { lam1: 0.0, lam2: 0.0 };
    let region = StateBox {
        x1: (-1.0, 1.0),
        x2: (-1.0, 1.0),
    };
    let rep = concavity_probe(&p, lam, region, 11);
    assert_eq!(rep.points, 121);
    assert_eq!(rep.negative_semidefinite, 121);
    assert!(rep.max_eigenvalue.abs() < 1e-6);
}
