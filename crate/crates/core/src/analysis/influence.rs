//! Influence functions `I_i = u_i x_j` and their windowed slopes.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::Spouse;
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfluenceSample {
    pub t: f64,
    pub partner_x: f64,
    pub influence: f64,
    pub control: f64,
}

/// The control of `spouse` paired with the partner's state, one per node.
pub fn influence_samples(traj: &Trajectory, spouse: Spouse) -> Vec<InfluenceSample> {
    let (u, partner) = match spouse {
        Spouse::One => (&traj.u1, &traj.x2),
        Spouse::Two => (&traj.u2, &traj.x1),
    };
    u.iter()
        .zip(partner)
        .enumerate()
        .map(|(k, (&control, &partner_x))| InfluenceSample {
            t: traj.time(k),
            partner_x,
            influence: control * partner_x,
            control,
        })
        .collect()
}

/// Below this variance of the partner state a window has no usable slope.
pub const MIN_X_VARIANCE: f64 = 1e-12;

/// Ordinary least-squares slope of `ys` on `xs`; `None` when the `xs`
/// variance is below [`MIN_X_VARIANCE`].
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx / n < MIN_X_VARIANCE {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Influence slope statistics of one spouse in one time window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeWindow {
    pub spouse: Spouse,
    pub start: f64,
    pub end: f64,
    pub mean_slope: f64,
    /// Sample standard deviation across trajectories (0 for a single one).
    pub std_slope: f64,
    /// Mean control in the window, averaged across trajectories.
    pub mean_control: f64,
    /// Windows that fell back to the mean control.
    pub fallback_count: usize,
    pub slopes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeProfile {
    pub horizon: f64,
    pub window: f64,
    pub trajectories: usize,
    /// Spouse 1 windows in time order, then spouse 2.
    pub windows: Vec<SlopeWindow>,
}

impl SlopeProfile {
    pub fn for_spouse(&self, spouse: Spouse) -> impl Iterator<Item = &SlopeWindow> {
        self.windows.iter().filter(move |w| w.spouse == spouse)
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Windowed least-squares slopes of the influence functions.
///
/// Windows are `[k w, (k + 1) w)`; the terminal node joins the last window.
pub fn slope_profile(trajs: &[Trajectory], window: f64) -> Result<SlopeProfile> {
    let first = trajs
        .first()
        .ok_or_else(|| Error::InvalidTrajectory("slope profile needs at least one trajectory".into()))?;
    let horizon = first.grid.horizon;
    if trajs.iter().any(|t| t.grid.horizon != horizon) {
        return Err(Error::InvalidTrajectory("trajectories have different horizons".into()));
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(invalid("window", format!("must be > 0, got {window}")));
    }
    let count = (horizon / window).round();
    if count < 1.0 || (count * window - horizon).abs() > 1e-9 * horizon {
        return Err(invalid("window", format!("{window} does not divide T = {horizon}")));
    }
    let count = count as usize;
    let window_of = |t: f64| ((t / window + 1e-9).floor() as usize).min(count - 1);

    let mut windows = Vec::with_capacity(2 * count);
    for spouse in Spouse::BOTH {
        let mut slopes = vec![Vec::with_capacity(trajs.len()); count];
        let mut controls = vec![Vec::with_capacity(trajs.len()); count];
        let mut fallbacks = vec![0usize; count];
        for traj in trajs {
            traj.check_shape()?;
            let samples = influence_samples(traj, spouse);
            let mut xs = vec![Vec::new(); count];
            let mut is = vec![Vec::new(); count];
            let mut us = vec![Vec::new(); count];
            for s in &samples {
                let w = window_of(s.t);
                xs[w].push(s.partner_x);
                is[w].push(s.influence);
                us[w].push(s.control);
            }
            for w in 0..count {
                let mean_u = us[w].iter().sum::<f64>() / us[w].len().max(1) as f64;
                let slope = least_squares_slope(&xs[w], &is[w]).unwrap_or_else(|| {
                    fallbacks[w] += 1;
                    mean_u
                });
                slopes[w].push(slope);
                controls[w].push(mean_u);
            }
        }
        for w in 0..count {
            let (mean_slope, std_slope) = mean_std(&slopes[w]);
            let (mean_control, _) = mean_std(&controls[w]);
            windows.push(SlopeWindow {
                spouse,
                start: w as f64 * window,
                end: (w + 1) as f64 * window,
                mean_slope,
                std_slope,
                mean_control,
                fallback_count: fallbacks[w],
                slopes: std::mem::take(&mut slopes[w]),
            });
        }
    }
    Ok(SlopeProfile {
        horizon,
        window,
        trajectories: trajs.len(),
        windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Grid;

    fn synthetic(n: usize, horizon: f64, u: impl Fn(f64) -> f64, x: impl Fn(f64) -> f64) -> Trajectory {
        let grid = Grid::new(n, horizon).unwrap();
        let ts: Vec<f64> = grid.times().collect();
        Trajectory {
            grid,
            x1: ts.iter().map(|&t| x(t)).collect(),
            x2: ts.iter().map(|&t| x(t) * 0.5 + 0.1).collect(),
            lam1: vec![0.0; n + 1],
            lam2: vec![0.0; n + 1],
            u1: ts.iter().map(|&t| u(t)).collect(),
            u2: ts.iter().map(|&t| u(t)).collect(),
        }
    }

    #[test]
    fn samples_follow_definition() {
        let t = synthetic(40, 4.0, |_| 0.3, |t| t.sin());
        let s = influence_samples(&t, Spouse::Two);
        assert_eq!(s.len(), 41);
        for (k, smp) in s.iter().enumerate() {
            assert_eq!(smp.influence, smp.control * smp.partner_x);
            assert_eq!(smp.partner_x, t.x1[k]);
            assert_eq!(smp.influence, 0.3 * t.x1[k]);
        }
    }

    #[test]
    fn constant_control_slopes_are_exact() {
        let trajs = vec![
            synthetic(100, 5.0, |_| 0.37, |t| (1.3 * t).sin()),
            synthetic(100, 5.0, |_| 0.37, |t| t * t - 2.0),
        ];
        let prof = slope_profile(&trajs, 1.0).unwrap();
        assert_eq!(prof.windows.len(), 10);
        for w in &prof.windows {
            assert!((w.mean_slope - 0.37).abs() < 1e-10);
            assert!(w.std_slope < 1e-10);
            assert_eq!(w.slopes.len(), 2);
        }
    }

    #[test]
    fn least_squares_matches_normal_equations() {
        // y = 2x - 1 with a symmetric +-0.1 perturbation
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 2.0 * x - 1.0 + if i % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        // normal equations in raw sums
        let n = xs.len() as f64;
        let (sx, sy): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let expect = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let got = least_squares_slope(&xs, &ys).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 2.0).abs() < 0.05);
    }

    #[test]
    fn flat_state_falls_back_to_mean_control() {
        let t = synthetic(50, 5.0, |t| 0.1 * t, |_| 0.4);
        let prof = slope_profile(&[t], 1.0).unwrap();
        let w0 = &prof.windows[0];
        assert_eq!(w0.fallback_count, 1);
        assert!((w0.mean_slope - w0.mean_control).abs() < 1e-15);
    }

    #[test]
    fn window_must_divide_horizon() {
        let t = synthetic(50, 5.0, |_| 0.1, |t| t);
        assert!(slope_profile(&[t.clone()], 2.0).is_err());
        assert!(slope_profile(&[], 1.0).is_err());
        let other = synthetic(50, 4.0, |_| 0.1, |t| t);
        assert!(slope_profile(&[t, other], 1.0).is_err());
    }
}
