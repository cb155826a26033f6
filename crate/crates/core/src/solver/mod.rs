//! Forward-backward sweep solver.
//!
//! The necessary conditions couple a state system with initial data to an
//! adjoint system with terminal data. The sweep alternates a forward RK4
//! solve of the states, a backward RK4 solve of the adjoints and a relaxed
//! update of the controls until every array stops changing relative to its
//! own size.

mod oracle;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{objective, AdjointVec, ControlVec, ModelParams, StateVec};

pub use oracle::{oracle_search, OracleMode, OracleResult, EXHAUSTIVE_BUDGET};
pub use sweep::{backward_sweep, forward_sweep, update_controls};

/// Uniform time grid `t_k = T k / N`, `k = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_steps: usize,
    pub horizon: f64,
}

impl Grid {
    pub fn new(n_steps: usize, horizon: f64) -> Result<Self> {
        if n_steps < 2 {
            return Err(invalid("n_steps", format!("must be >= 2, got {n_steps}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid("T", format!("must be finite and > 0, got {horizon}")));
        }
        Ok(Self { n_steps, horizon })
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.n_steps as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }
}

/// Per-node control values of both spouses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlArrays {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl ControlArrays {
    pub fn constant(len: usize, u1: f64, u2: f64) -> Self {
        Self {
            u1: vec![u1; len],
            u2: vec![u2; len],
        }
    }

    pub fn at(&self, k: usize) -> ControlVec {
        ControlVec {
            u1: self.u1[k],
            u2: self.u2[k],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateArrays {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl StateArrays {
    pub fn at(&self, k: usize) -> StateVec {
        StateVec {
            x1: self.x1[k],
            x2: self.x2[k],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdjointArrays {
    pub lam1: Vec<f64>,
    pub lam2: Vec<f64>,
}

impl AdjointArrays {
    pub fn at(&self, k: usize) -> AdjointVec {
        AdjointVec {
            lam1: self.lam1[k],
            lam2: self.lam2[k],
        }
    }
}

/// Sweep tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub n_steps: usize,
    /// Relative change tolerance applied to all six arrays.
    pub tolerance: f64,
    /// Weight of the new control law in the convex control update.
    pub relaxation: f64,
    pub max_iters: usize,
    /// Constant initial guess for spouse 1; `None` means `u0`.
    pub initial_u1: Option<f64>,
    pub initial_u2: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_steps: 1000,
            tolerance: 1e-3,
            relaxation: 0.5,
            max_iters: 500,
            initial_u1: None,
            initial_u2: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(invalid("n_steps", format!("must be >= 2, got {}", self.n_steps)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(invalid("tolerance", format!("must be > 0, got {}", self.tolerance)));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(invalid(
                "relaxation",
                format!("must lie in (0, 1], got {}", self.relaxation),
            ));
        }
        if self.max_iters < 1 {
            return Err(invalid("max_iters", "must be >= 1"));
        }
        for (key, v) in [("initial_u1", self.initial_u1), ("initial_u2", self.initial_u2)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(invalid(key, format!("must be finite, got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn initial_controls(&self, p: &ModelParams, len: usize) -> ControlArrays {
        let u = p.clamp_controls(ControlVec {
            u1: self.initial_u1.unwrap_or(p.u0),
            u2: self.initial_u2.unwrap_or(p.u0),
        });
        ControlArrays::constant(len, u.u1, u.u2)
    }
}

/// Discretized state, adjoint and control histories on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub lam1: Vec<f64>,
    pub lam2: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl Trajectory {
    pub fn from_parts(
        grid: Grid,
        states: StateArrays,
        adjoints: AdjointArrays,
        controls: ControlArrays,
    ) -> Result<Self> {
        let t = Self {
            grid,
            x1: states.x1,
            x2: states.x2,
            lam1: adjoints.lam1,
            lam2: adjoints.lam2,
            u1: controls.u1,
            u2: controls.u2,
        };
        t.check_shape()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.grid.len();
        let lens = [
            self.x1.len(),
            self.x2.len(),
            self.lam1.len(),
            self.lam2.len(),
            self.u1.len(),
            self.u2.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::InvalidTrajectory(format!(
                "array lengths {lens:?} do not match grid length {n}"
            )));
        }
        Ok(())
    }

    pub fn time(&self, k: usize) -> f64 {
        self.grid.time(k)
    }

    pub fn state(&self, k: usize) -> StateVec {
        StateVec {
            x1: self.x1[k],
            x2: self.x2[k],
        }
    }

    pub fn adjoint(&self, k: usize) -> AdjointVec {
        AdjointVec {
            lam1: self.lam1[k],
            lam2: self.lam2[k],
        }
    }

    pub fn control(&self, k: usize) -> ControlVec {
        ControlVec {
            u1: self.u1[k],
            u2: self.u2[k],
        }
    }

    pub fn controls(&self) -> ControlArrays {
        ControlArrays {
            u1: self.u1.clone(),
            u2: self.u2.clone(),
        }
    }

    pub fn states(&self) -> StateArrays {
        StateArrays {
            x1: self.x1.clone(),
            x2: self.x2.clone(),
        }
    }

    pub fn adjoints(&self) -> AdjointArrays {
        AdjointArrays {
            lam1: self.lam1.clone(),
            lam2: self.lam2.clone(),
        }
    }
}

/// Output of [`fbs_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub trajectory: Trajectory,
    pub converged: bool,
    pub iterations: usize,
    pub objective_value: f64,
    /// Largest nodewise control change of each iteration.
    pub history: Vec<f64>,
}

/// `delta * |new|_1 >= |new - old|_1`
fn within_tolerance(delta: f64, new: &[f64], old: &[f64]) -> bool {
    let norm: f64 = new.iter().map(|v| v.abs()).sum();
    let diff: f64 = new.iter().zip(old).map(|(a, b)| (a - b).abs()).sum();
    delta * norm - diff >= 0.0
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs the forward-backward sweep to convergence or `max_iters`.
///
/// Running out of iterations is reported through `converged = false`; the
/// last iterate is still returned. The returned states and adjoints are
/// recomputed from the returned controls so the trajectory is consistent.
pub fn fbs_solve(p: &ModelParams, cfg: &SolverConfig) -> Result<SolveResult> {
    p.validate()?;
    cfg.validate()?;
    let grid = Grid::new(cfg.n_steps, p.horizon)?;
    let len = grid.len();
    let diverged = |iteration: usize| move |e: Error| Error::SolveDiverged {
        iteration,
        source: Box::new(e),
    };

    let mut u = cfg.initial_controls(p, len);
    let mut x = StateArrays {
        x1: vec![0.0; len],
        x2: vec![0.0; len],
    };
    let mut lam = AdjointArrays {
        lam1: vec![0.0; len],
        lam2: vec![0.0; len],
    };
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let x_new = forward_sweep(p, &grid, &u).map_err(diverged(iterations))?;
        let lam_new = backward_sweep(p, &grid, &u).map_err(diverged(iterations))?;
        let u_new = update_controls(p, &x_new, &lam_new, &u, cfg.relaxation);

        history.push(max_abs_diff(&u_new.u1, &u.u1).max(max_abs_diff(&u_new.u2, &u.u2)));
        let d = cfg.tolerance;
        converged = within_tolerance(d, &u_new.u1, &u.u1)
            && within_tolerance(d, &u_new.u2, &u.u2)
            && within_tolerance(d, &x_new.x1, &x.x1)
            && within_tolerance(d, &x_new.x2, &x.x2)
            && within_tolerance(d, &lam_new.lam1, &lam.lam1)
            && within_tolerance(d, &lam_new.lam2, &lam.lam2);

        u = u_new;
        x = x_new;
        lam = lam_new;
        if converged {
            break;
        }
    }

    let x = forward_sweep(p, &grid, &u).map_err(diverged(iterations))?;
    let lam = backward_sweep(p, &grid, &u).map_err(diverged(iterations))?;
    let trajectory = Trajectory::from_parts(grid, x, lam, u)?;
    let objective_value = objective(p, &trajectory)?;
    Ok(SolveResult {
        trajectory,
        converged,
        iterations,
        objective_value,
        history,
    })
}
