//! Brute-force search over piecewise-constant controls.
//!
//! Used to check sweep solutions: each spouse's control is constant on
//! `segments` equal subintervals, with values on a `levels`-point grid over
//! `[0, u_max]`. Small searches enumerate every combination; larger ones fall
//! back to coordinate descent over the segment values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{objective, ModelParams};

use super::{backward_sweep, forward_sweep, ControlArrays, Grid, Trajectory};

/// Largest candidate count enumerated exhaustively.
pub const EXHAUSTIVE_BUDGET: u64 = 10_000_000;

const MAX_DESCENT_PASSES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Exhaustive when within budget, coordinate descent otherwise.
    #[default]
    Auto,
    Exhaustive,
    CoordinateDescent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Segment values of spouse 1, in time order.
    pub u1_segments: Vec<f64>,
    pub u2_segments: Vec<f64>,
    pub trajectory: Trajectory,
    pub objective_value: f64,
    pub candidates_evaluated: u64,
    pub mode: OracleMode,
}

struct Search<'a> {
    p: &'a ModelParams,
    grid: Grid,
    segments: usize,
    levels1: Vec<f64>,
    levels2: Vec<f64>,
}

impl Search<'_> {
    /// Level indices (u1 segments then u2 segments) to nodal controls.
    fn controls(&self, choice: &[usize]) -> ControlArrays {
        let n = self.grid.n_steps;
        let seg = |k: usize| (k * self.segments / n).min(self.segments - 1);
        let (c1, c2) = choice.split_at(self.segments);
        ControlArrays {
            u1: (0..=n).map(|k| self.levels1[c1[seg(k)]]).collect(),
            u2: (0..=n).map(|k| self.levels2[c2[seg(k)]]).collect(),
        }
    }

    /// Payoff of a candidate; diverging candidates score `-inf`.
    fn payoff(&self, choice: &[usize]) -> f64 {
        let u = self.controls(choice);
        let Ok(x) = forward_sweep(self.p, &self.grid, &u) else {
            return f64::NEG_INFINITY;
        };
        let n = self.grid.len();
        let traj = Trajectory {
            grid: self.grid,
            x1: x.x1,
            x2: x.x2,
            lam1: vec![0.0; n],
            lam2: vec![0.0; n],
            u1: u.u1,
            u2: u.u2,
        };
        match objective(self.p, &traj) {
            Ok(j) if j.is_finite() => j,
            _ => f64::NEG_INFINITY,
        }
    }

    fn decode(&self, mut index: u64, levels: u64) -> Vec<usize> {
        (0..2 * self.segments)
            .map(|_| {
                let d = (index % levels) as usize;
                index /= levels;
                d
            })
            .collect()
    }

    fn exhaustive(&self, total: u64) -> (Vec<usize>, f64) {
        let levels = self.levels1.len() as u64;
        let (best, j) = (0..total)
            .into_par_iter()
            .map(|i| (i, self.payoff(&self.decode(i, levels))))
            .reduce(
                || (u64::MAX, f64::NEG_INFINITY),
                |a, b| {
                    // lowest index wins ties so the result is schedule independent
                    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                        b
                    } else {
                        a
                    }
                },
            );
        (self.decode(best, levels), j)
    }

    fn coordinate_descent(&self, u0: f64) -> (Vec<usize>, f64, u64) {
        let nearest = |levels: &[f64]| {
            (0..levels.len())
                .min_by(|&a, &b| (levels[a] - u0).abs().total_cmp(&(levels[b] - u0).abs()))
                .unwrap_or(0)
        };
        let mut choice: Vec<usize> = (0..2 * self.segments)
            .map(|i| {
                if i < self.segments {
                    nearest(&self.levels1)
                } else {
                    nearest(&self.levels2)
                }
            })
            .collect();
        let mut best = self.payoff(&choice);
        let mut evaluated = 1u64;
        for _ in 0..MAX_DESCENT_PASSES {
            let mut improved = false;
            for coord in 0..choice.len() {
                let current = choice[coord];
                let trials: Vec<(usize, f64)> = (0..self.levels1.len())
                    .filter(|&l| l != current)
                    .collect::<Vec<_>>()
                    .into_par_iter()
                    .map(|l| {
                        let mut c = choice.clone();
                        c[coord] = l;
                        (l, self.payoff(&c))
                    })
                    .collect();
                evaluated += trials.len() as u64;
                for (l, j) in trials {
                    if j > best {
                        best = j;
                        choice[coord] = l;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (choice, best, evaluated)
    }
}

/// Best piecewise-constant control pair by brute force.
pub fn oracle_search(
    p: &ModelParams,
    segments: usize,
    levels: usize,
    n_steps: usize,
    mode: OracleMode,
) -> Result<OracleResult> {
    p.validate()?;
    if segments < 1 {
        return Err(invalid("segments", "must be >= 1"));
    }
    if levels < 2 {
        return Err(invalid("levels", format!("must be >= 2, got {levels}")));
    }
    if n_steps < segments.max(2) {
        return Err(invalid("n_steps", "must be >= max(segments, 2)"));
    }
    let grid = Grid::new(n_steps, p.horizon)?;
    let level_grid = |umax: f64| -> Vec<f64> {
        (0..levels)
            .map(|i| if i == levels - 1 { umax } else { umax * i as f64 / (levels - 1) as f64 })
            .collect()
    };
    let search = Search {
        p,
        grid,
        segments,
        levels1: level_grid(p.u1max),
        levels2: level_grid(p.u2max),
    };

    let total = (levels as f64).powi(2 * segments as i32);
    let exhaustive = match mode {
        OracleMode::Exhaustive if total > EXHAUSTIVE_BUDGET as f64 => {
            return Err(Error::BudgetExceeded {
                candidates: total,
                budget: EXHAUSTIVE_BUDGET,
            })
        }
        OracleMode::Exhaustive => true,
        OracleMode::Auto => total <= EXHAUSTIVE_BUDGET as f64,
        OracleMode::CoordinateDescent => false,
    };

    let (choice, objective_value, evaluated, mode) = if exhaustive {
        let (c, j) = search.exhaustive(total as u64);
        (c, j, total as u64, OracleMode::Exhaustive)
    } else {
        let (c, j, n) = search.coordinate_descent(p.u0);
        (c, j, n, OracleMode::CoordinateDescent)
    };

    let u = search.controls(&choice);
    let x = forward_sweep(p, &grid, &u)?;
    let lam = backward_sweep(p, &grid, &u)?;
    let trajectory = Trajectory::from_parts(grid, x, lam, u)?;
    let (c1, c2) = choice.split_at(segments);
    Ok(OracleResult {
        u1_segments: c1.iter().map(|&i| search.levels1[i]).collect(),
        u2_segments: c2.iter().map(|&i| search.levels2[i]).collect(),
        trajectory,
        objective_value,
        candidates_evaluated: evaluated,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{example1, example2};

    #[test]
    fn single_segment_two_levels_enumerates_four() {
        let r = oracle_search(&example1(), 1, 2, 50, OracleMode::Auto).unwrap();
        assert_eq!(r.candidates_evaluated, 4);
        assert_eq!(r.mode, OracleMode::Exhaustive);
        for v in r.u1_segments.iter().chain(&r.u2_segments) {
            assert!(*v == 0.0 || *v == 0.5);
        }
    }

    #[test]
    fn zero_control_payoff_matches_closed_form() {
        // one segment, two levels: the all-zero candidate is index 0
        let p = example1();
        let n = 10_000;
        let grid = Grid::new(n, p.horizon).unwrap();
        let search = Search {
            p: &p,
            grid,
            segments: 1,
            levels1: vec![0.0, 0.5],
            levels2: vec![0.0, 0.5],
        };
        let j = search.payoff(&[0, 0]);
        let tt = p.horizon;
        let integral = |xbar: f64, x0: f64, r: f64| xbar * tt + (x0 - xbar) * (1.0 - (-r * tt).exp()) / r;
        let expect = p.alpha * integral(p.xbar1, p.x1_0, p.r1)
            + (1.0 - p.alpha) * integral(p.xbar2, p.x2_0, p.r2);
        assert!((j - expect).abs() < 1e-6, "{j} vs {expect}");
    }

    #[test]
    fn forced_exhaustive_over_budget_is_an_error() {
        let e = oracle_search(&example1(), 12, 4, 48, OracleMode::Exhaustive).unwrap_err();
        assert!(matches!(e, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn auto_mode_falls_back_to_descent() {
        let r = oracle_search(&example2(0.1), 12, 4, 48, OracleMode::Auto).unwrap();
        assert_eq!(r.mode, OracleMode::CoordinateDescent);
        assert!(r.objective_value.is_finite());
        assert!(r.candidates_evaluated > 1);
    }

    #[test]
    fn segment_assignment_covers_grid() {
        let p = example1();
        let search = Search {
            p: &p,
            grid: Grid::new(10, 10.0).unwrap(),
            segments: 4,
            levels1: vec![0.0, 1.0, 2.0, 3.0],
            levels2: vec![0.0, 1.0, 2.0, 3.0],
        };
        let u = search.controls(&[0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(u.u1, vec![0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0]);
        assert_eq!(u.u2[0], 3.0);
        assert_eq!(u.u2[10], 0.0);
    }
}
