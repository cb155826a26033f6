//! Experiment dispatch and result persistence.

use std::path::Path;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::output::{csv, num, trajectory_csv, FileEntry, OutputDir};
use super::scenario::{Experiment, Scenario};
use crate::analysis::{
    classify_adjoint_equilibrium, singularity_report, slope_profile, style_classify, EquilibriumReport,
    SingularityReport, StyleVerdict, SINGULAR_TOL,
};
use crate::error::Error;
use crate::model::{AdjointVec, Epsilon, ModelParams};
use crate::perturbation::{perturbation_trajectory, Order};
use crate::solver::{
    backward_sweep, fbs_solve, oracle_search, ControlArrays, Grid, OracleMode, SolveResult, SolverConfig,
    Trajectory,
};

/// Failure of a run, each with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Invalid(Error),
    #[error("{0}")]
    NotConverged(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 2,
            RunError::NotConverged(_) => 3,
            RunError::Io(_) => 4,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } | Error::SolveDiverged { .. } => RunError::NotConverged(e.to_string()),
            other => RunError::Invalid(other),
        }
    }
}

/// Command-line overrides applied on top of the scenario.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub allow_nonconverged: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    /// Output subdirectory, empty for single-solve runs.
    pub label: String,
    pub epsilon: Epsilon,
    pub alpha: f64,
    pub horizon: f64,
    pub converged: bool,
    pub iterations: usize,
    pub objective_value: Option<f64>,
    pub final_change: Option<f64>,
    pub max_dev_u1: Option<f64>,
    pub max_dev_u2: Option<f64>,
    pub styles: Option<StyleVerdict>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSummary {
    /// Frozen controls the report refers to.
    pub u1: f64,
    pub u2: f64,
    pub report: EquilibriumReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSummary {
    pub order: Order,
    pub eta: [f64; 2],
    pub rho: [f64; 2],
    /// Largest nodewise gap between the sweep and the expansion over the
    /// state and adjoint arrays.
    pub sup_norm_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub mode: OracleMode,
    pub candidates_evaluated: u64,
    pub objective_value: f64,
    pub sweep_objective_value: f64,
    pub u1_segments: Vec<f64>,
    pub u2_segments: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessSummary {
    pub horizon: f64,
    pub samples: usize,
    pub converged: usize,
    pub seed: u64,
    pub generator: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub kind: &'static str,
    pub scenario: Scenario,
    /// True when every solve of the run converged.
    pub converged: bool,
    pub points: Vec<PointSummary>,
    pub equilibrium: EquilibriumSummary,
    pub singularity: SingularityReport,
    pub perturbation: Option<PerturbationSummary>,
    pub oracle: Option<OracleSummary>,
    pub robustness: Vec<RobustnessSummary>,
    pub files: Vec<FileEntry>,
    pub wall_clock_seconds: f64,
}

pub const MANIFEST_NAME: &str = "manifest.json";
pub const GENERATOR: &str = "ChaCha8Rng::seed_from_u64";

fn max_dev(u: &[f64], u0: f64) -> f64 {
    u.iter().map(|v| (v - u0).abs()).fold(0.0, f64::max)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn summarize(label: String, p: &ModelParams, s: &Scenario, r: &Result<SolveResult, Error>) -> PointSummary {
    let base = PointSummary {
        label,
        epsilon: p.epsilon,
        alpha: p.alpha,
        horizon: p.horizon,
        converged: false,
        iterations: 0,
        objective_value: None,
        final_change: None,
        max_dev_u1: None,
        max_dev_u2: None,
        styles: None,
        error: None,
    };
    match r {
        Ok(r) => PointSummary {
            converged: r.converged,
            iterations: r.iterations,
            objective_value: Some(r.objective_value),
            final_change: r.history.last().copied(),
            max_dev_u1: Some(max_dev(&r.trajectory.u1, p.u0)),
            max_dev_u2: Some(max_dev(&r.trajectory.u2, p.u0)),
            styles: Some(style_classify(&r.trajectory, p, &s.thresholds)),
            ..base
        },
        Err(e) => PointSummary {
            error: Some(e.to_string()),
            ..base
        },
    }
}

/// Propagates invalid-input errors; divergence stays a recorded outcome.
fn keep_divergence(r: Result<SolveResult, Error>) -> Result<Result<SolveResult, Error>, RunError> {
    match r {
        Err(e @ (Error::Divergence { .. } | Error::SolveDiverged { .. })) => Ok(Err(e)),
        Err(e) => Err(RunError::Invalid(e)),
        Ok(r) => Ok(Ok(r)),
    }
}

fn equilibrium_at_mean(p: &ModelParams, traj: Option<&Trajectory>) -> EquilibriumSummary {
    let (u1, u2) = traj.map_or((p.u0, p.u0), |t| (mean(&t.u1), mean(&t.u2)));
    EquilibriumSummary {
        u1,
        u2,
        report: classify_adjoint_equilibrium(p, u1, u2),
    }
}

struct Outcome {
    points: Vec<PointSummary>,
    equilibrium: EquilibriumSummary,
    perturbation: Option<PerturbationSummary>,
    oracle: Option<OracleSummary>,
    robustness: Vec<RobustnessSummary>,
    all_converged: bool,
}

impl Outcome {
    fn new(points: Vec<PointSummary>, equilibrium: EquilibriumSummary) -> Self {
        let all_converged = points.iter().all(|p| p.converged);
        Self {
            points,
            equilibrium,
            perturbation: None,
            oracle: None,
            robustness: Vec::new(),
            all_converged,
        }
    }
}

/// Runs `scenario`, writes its outputs and `manifest.json` into `out_dir`.
///
/// With strict convergence a non-converged run still writes every file
/// and the manifest before reporting [`RunError::NotConverged`].
pub fn run_scenario(scenario: &Scenario, out_dir: &Path, opts: RunOptions) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let mut scenario = scenario.clone();
    if let (Some(seed), Experiment::Robustness { seed: s, .. }) = (opts.seed, &mut scenario.experiment) {
        *s = seed;
    }
    scenario.allow_nonconverged |= opts.allow_nonconverged;
    scenario.validate()?;
    let s = &scenario;
    let p = &s.params;
    let mut out = OutputDir::create(out_dir)?;

    let outcome = match &s.experiment {
        Experiment::Solve {} => run_solve(s, &mut out)?,
        Experiment::SweepEpsilon { values } => {
            let params: Vec<ModelParams> = values.iter().map(|&epsilon| ModelParams { epsilon, ..*p }).collect();
            run_sweep(s, &params, &mut out)?
        }
        Experiment::SweepAlpha { values } => {
            let params: Vec<ModelParams> = values.iter().map(|&alpha| ModelParams { alpha, ..*p }).collect();
            run_sweep(s, &params, &mut out)?
        }
        Experiment::Perturb { order } => run_perturb(s, Order::try_from(*order)?, &mut out)?,
        Experiment::Classify {
            u1,
            u2,
            lambda_box,
            field_points,
        } => run_classify(s, *u1, *u2, *lambda_box, *field_points, &mut out)?,
        Experiment::Robustness {
            horizons,
            samples,
            seed,
            window,
            initial_range,
        } => run_robustness(s, horizons, *samples, *seed, *window, *initial_range, &mut out)?,
        Experiment::Oracle {
            segments,
            levels,
            mode,
            n_steps,
        } => run_oracle(s, *segments, *levels, *mode, n_steps.unwrap_or(s.solver.n_steps), &mut out)?,
    };

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        kind: s.experiment.kind(),
        scenario: scenario.clone(),
        converged: outcome.all_converged,
        points: outcome.points,
        equilibrium: outcome.equilibrium,
        singularity: singularity_report(p, SINGULAR_TOL),
        perturbation: outcome.perturbation,
        oracle: outcome.oracle,
        robustness: outcome.robustness,
        files: out.files().to_vec(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(out.root().join(MANIFEST_NAME), text)?;

    if !manifest.converged && !s.allow_nonconverged {
        return Err(RunError::NotConverged(format!(
            "{} run did not converge; outputs and manifest were written to {}",
            manifest.kind,
            out_dir.display()
        )));
    }
    Ok(manifest)
}

fn run_solve(s: &Scenario, out: &mut OutputDir) -> Result<Outcome, RunError> {
    let r = keep_divergence(fbs_solve(&s.params, &s.solver))?;
    if let Ok(r) = &r {
        out.write_trajectory_set("", &r.trajectory)?;
    }
    let eq = equilibrium_at_mean(&s.params, r.as_ref().ok().map(|r| &r.trajectory));
    Ok(Outcome::new(vec![summarize(String::new(), &s.params, s, &r)], eq))
}

const AGGREGATE_HEADER: &str =
    "index,label,epsilon,alpha,converged,iterations,objective,max_dev_u1,max_dev_u2,style1,style2";

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn run_sweep(s: &Scenario, params: &[ModelParams], out: &mut OutputDir) -> Result<Outcome, RunError> {
    let results: Vec<_> = params.par_iter().map(|p| fbs_solve(p, &s.solver)).collect();
    let mut points = Vec::with_capacity(params.len());
    let mut first_traj = None;
    for (i, (p, r)) in params.iter().zip(results).enumerate() {
        let r = keep_divergence(r)?;
        let label = point_dir(i);
        if let Ok(r) = &r {
            out.write_trajectory_set(&label, &r.trajectory)?;
            first_traj.get_or_insert_with(|| r.trajectory.clone());
        }
        points.push(summarize(label, p, s, &r));
    }
    let rows = points.iter().enumerate().map(|(i, pt)| {
        let (s1, s2) = pt
            .styles
            .as_ref()
            .map(|v| (v.spouse1.label.to_string(), v.spouse2.label.to_string()))
            .unwrap_or_default();
        vec![
            i.to_string(),
            pt.label.clone(),
            match pt.epsilon {
                Epsilon::Finite(e) => num(e),
                Epsilon::Infinite => "infinite".into(),
            },
            num(pt.alpha),
            pt.converged.to_string(),
            pt.iterations.to_string(),
            opt_num(pt.objective_value),
            opt_num(pt.max_dev_u1),
            opt_num(pt.max_dev_u2),
            s1,
            s2,
        ]
    });
    out.write("aggregate.csv", &csv(AGGREGATE_HEADER, rows))?;
    let eq = equilibrium_at_mean(&s.params, first_traj.as_ref());
    Ok(Outcome::new(points, eq))
}

fn run_perturb(s: &Scenario, order: Order, out: &mut OutputDir) -> Result<Outcome, RunError> {
    let p = &s.params;
    let grid = Grid::new(s.solver.n_steps, p.horizon)?;
    let pert = perturbation_trajectory(p, &grid, order)?;
    let r = keep_divergence(fbs_solve(p, &s.solver))?;
    out.write("perturbation/trajectory.csv", &trajectory_csv(&pert.assembled))?;
    let mut summary = None;
    if let Ok(r) = &r {
        out.write_trajectory_set("", &r.trajectory)?;
        let a = &pert.assembled;
        let t = &r.trajectory;
        let gap = [(&a.x1, &t.x1), (&a.x2, &t.x2), (&a.lam1, &t.lam1), (&a.lam2, &t.lam2)]
            .iter()
            .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        summary = Some(gap);
    }
    let z = &pert.zeroth_solution;
    let eq = equilibrium_at_mean(p, r.as_ref().ok().map(|r| &r.trajectory));
    let mut o = Outcome::new(vec![summarize(String::new(), p, s, &r)], eq);
    o.perturbation = Some(PerturbationSummary {
        order,
        eta: [z.eta1, z.eta2],
        rho: [z.rho1, z.rho2],
        sup_norm_difference: summary.unwrap_or(f64::NAN),
    });
    Ok(o)
}

fn run_classify(
    s: &Scenario,
    u1: f64,
    u2: f64,
    lambda_box: [[f64; 2]; 2],
    points: usize,
    out: &mut OutputDir,
) -> Result<Outcome, RunError> {
    let p = &s.params;
    let ctl = crate::model::ControlVec { u1, u2 };
    let axis = |[lo, hi]: [f64; 2], i: usize| lo + (hi - lo) * i as f64 / (points - 1) as f64;
    let mut field = Vec::with_capacity(points * points);
    for i in 0..points {
        for j in 0..points {
            let lam = AdjointVec {
                lam1: axis(lambda_box[0], i),
                lam2: axis(lambda_box[1], j),
            };
            let d = p.adjoint_rhs(lam, ctl);
            field.push([num(lam.lam1), num(lam.lam2), num(d.lam1), num(d.lam2)]);
        }
    }
    out.write("phase_field.csv", &csv("lambda1,lambda2,dlambda1,dlambda2", field))?;

    // The orbit that reaches the origin at T, traced backward in time.
    let grid = Grid::new(s.solver.n_steps, p.horizon)?;
    let lam = backward_sweep(p, &grid, &ControlArrays::constant(grid.len(), u1, u2))?;
    let orbit = (0..grid.len()).map(|k| [num(grid.time(k)), num(lam.lam1[k]), num(lam.lam2[k])]);
    out.write("origin_orbit.csv", &csv("t,lambda1,lambda2", orbit))?;

    let eq = EquilibriumSummary {
        u1,
        u2,
        report: classify_adjoint_equilibrium(p, u1, u2),
    };
    Ok(Outcome::new(Vec::new(), eq))
}

/// Initial conditions drawn uniformly from `range^2`, reproducible per seed.
pub fn draw_initial_conditions(seed: u64, samples: usize, range: [f64; 2]) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| (rng.random_range(range[0]..range[1]), rng.random_range(range[0]..range[1])))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_robustness(
    s: &Scenario,
    horizons: &[f64],
    samples: usize,
    seed: u64,
    window: f64,
    range: [f64; 2],
    out: &mut OutputDir,
) -> Result<Outcome, RunError> {
    let ics = draw_initial_conditions(seed, samples, range);
    let mut profile_rows = Vec::new();
    let mut slope_rows = Vec::new();
    let mut ic_rows = Vec::new();
    let mut summaries = Vec::new();
    let mut all_converged = true;
    for &horizon in horizons {
        let runs: Vec<_> = ics
            .par_iter()
            .map(|&(x1_0, x2_0)| {
                let p = ModelParams {
                    horizon,
                    x1_0,
                    x2_0,
                    ..s.params
                };
                fbs_solve(&p, &s.solver)
            })
            .collect();
        let mut trajs = Vec::new();
        let mut kept = Vec::new();
        for (i, r) in runs.into_iter().enumerate() {
            let r = keep_divergence(r)?;
            let (converged, iterations) = r.as_ref().map_or((false, 0), |r| (r.converged, r.iterations));
            all_converged &= converged;
            ic_rows.push(vec![
                num(horizon),
                i.to_string(),
                num(ics[i].0),
                num(ics[i].1),
                converged.to_string(),
                iterations.to_string(),
            ]);
            if let Ok(r) = r {
                if r.converged {
                    trajs.push(r.trajectory);
                    kept.push(i);
                }
            }
        }
        summaries.push(RobustnessSummary {
            horizon,
            samples,
            converged: trajs.len(),
            seed,
            generator: GENERATOR,
        });
        if trajs.is_empty() {
            all_converged = false;
            continue;
        }
        let prof = slope_profile(&trajs, window)?;
        for w in &prof.windows {
            profile_rows.push(vec![
                num(horizon),
                w.spouse.index().to_string(),
                num(w.start),
                num(w.end),
                num(w.mean_slope),
                num(w.std_slope),
                num(w.mean_control),
                w.fallback_count.to_string(),
                w.slopes.len().to_string(),
            ]);
            for (slope, sample) in w.slopes.iter().zip(&kept) {
                slope_rows.push(vec![
                    num(horizon),
                    w.spouse.index().to_string(),
                    num(w.start),
                    num(w.end),
                    sample.to_string(),
                    num(*slope),
                ]);
            }
        }
    }
    out.write(
        "initial_conditions.csv",
        &csv("T,sample,x1_0,x2_0,converged,iterations", ic_rows),
    )?;
    out.write(
        "slope_profile.csv",
        &csv(
            "T,spouse,window_start,window_end,mean_slope,std_slope,mean_control,fallback_count,trajectories",
            profile_rows,
        ),
    )?;
    out.write(
        "window_slopes.csv",
        &csv("T,spouse,window_start,window_end,sample,slope", slope_rows),
    )?;
    let mut o = Outcome::new(Vec::new(), equilibrium_at_mean(&s.params, None));
    o.all_converged = all_converged;
    o.robustness = summaries;
    Ok(o)
}

fn run_oracle(
    s: &Scenario,
    segments: usize,
    levels: usize,
    mode: OracleMode,
    n_steps: usize,
    out: &mut OutputDir,
) -> Result<Outcome, RunError> {
    let p = &s.params;
    let cfg = SolverConfig { n_steps, ..s.solver };
    let r = keep_divergence(fbs_solve(p, &cfg))?;
    let o = oracle_search(p, segments, levels, n_steps, mode)?;
    if let Ok(r) = &r {
        out.write_trajectory_set("", &r.trajectory)?;
    }
    out.write("oracle/trajectory.csv", &trajectory_csv(&o.trajectory))?;
    let horizon = p.horizon;
    let seg_rows = (0..segments).map(|i| {
        vec![
            i.to_string(),
            num(horizon * i as f64 / segments as f64),
            num(horizon * (i + 1) as f64 / segments as f64),
            num(o.u1_segments[i]),
            num(o.u2_segments[i]),
        ]
    });
    out.write("oracle/segments.csv", &csv("segment,start,end,u1,u2", seg_rows))?;
    let eq = equilibrium_at_mean(p, r.as_ref().ok().map(|r| &r.trajectory));
    let sweep_objective = r.as_ref().map_or(f64::NAN, |r| r.objective_value);
    let mut outcome = Outcome::new(vec![summarize(String::new(), p, s, &r)], eq);
    outcome.oracle = Some(OracleSummary {
        mode: o.mode,
        candidates_evaluated: o.candidates_evaluated,
        objective_value: o.objective_value,
        sweep_objective_value: sweep_objective,
        u1_segments: o.u1_segments,
        u2_segments: o.u2_segments,
    });
    Ok(outcome)
}

/// Files under `root` relative to it, excluding the manifest itself.
pub fn list_outputs(root: &Path) -> std::io::Result<Vec<String>> {
    fn walk(dir: &Path, root: &Path, acc: &mut Vec<String>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(&path, root, acc)?;
            } else {
                let rel = path.strip_prefix(root).expect("below root");
                let rel: Vec<_> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                acc.push(rel.join("/"));
            }
        }
        Ok(())
    }
    let mut acc = Vec::new();
    walk(root, root, &mut acc)?;
    acc.retain(|f| f != MANIFEST_NAME);
    acc.sort();
    Ok(acc)
}

/// Output subdirectory name for a sweep point.
pub fn point_dir(index: usize) -> String {
    format!("point_{index:03}")
}
