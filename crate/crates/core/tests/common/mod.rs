#![allow(dead_code)]

use marriage_oc::{Epsilon, ModelParams};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Linear problem: alpha = 1, infinite epsilon, T = 10.
pub fn example1() -> ModelParams {
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

/// Symmetric couple on T = 3 with the given cost scale.
pub fn example2(eps: f64) -> ModelParams {
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

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random valid parameter set with finite epsilon and the given alpha.
pub fn random_params(rng: &mut ChaCha8Rng, alpha: f64) -> ModelParams {
    let u1max: f64 = rng.random_range(0.1..1.0);
    let u2max: f64 = rng.random_range(0.1..1.0);
    ModelParams {
        r1: rng.random_range(0.1..2.0),
        r2: rng.random_range(0.1..2.0),
        xbar1: rng.random_range(-1.0..1.0),
        xbar2: rng.random_range(-1.0..1.0),
        alpha,
        epsilon: Epsilon::Finite(rng.random_range(0.01..2.0)),
        u0: rng.random_range(0.0..u1max.min(u2max)),
        u1max,
        u2max,
        horizon: rng.random_range(0.5..5.0),
        x1_0: rng.random_range(-1.0..1.0),
        x2_0: rng.random_range(-1.0..1.0),
    }
}
