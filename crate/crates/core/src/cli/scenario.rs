//! Scenario files: one JSON document per experiment.

use serde::{Deserialize, Serialize};

use crate::analysis::StyleThresholds;
use crate::error::{invalid, Result};
use crate::model::{Epsilon, ModelParams};
use crate::solver::{OracleMode, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub params: ModelParams,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub thresholds: StyleThresholds,
    #[serde(default)]
    pub allow_nonconverged: bool,
    pub experiment: Experiment,
}

fn default_order() -> u8 {
    1
}

fn default_window() -> f64 {
    1.0
}

fn default_ic_range() -> [f64; 2] {
    [-1.0, 1.0]
}

fn default_lambda_box() -> [[f64; 2]; 2] {
    [[-1.0, 3.0], [-1.0, 3.0]]
}

fn default_field_points() -> usize {
    21
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// A single sweep solve of `params`.
    Solve {},
    /// One solve per epsilon value, all other parameters fixed.
    SweepEpsilon { values: Vec<Epsilon> },
    /// One solve per alpha value.
    SweepAlpha { values: Vec<f64> },
    /// Sweep solve compared with the truncated small-epsilon expansion.
    Perturb {
        #[serde(default = "default_order")]
        order: u8,
    },
    /// Adjoint phase plane for frozen controls.
    Classify {
        u1: f64,
        u2: f64,
        #[serde(default = "default_lambda_box")]
        lambda_box: [[f64; 2]; 2],
        #[serde(default = "default_field_points")]
        field_points: usize,
    },
    /// Influence slopes over random initial conditions, per horizon.
    Robustness {
        horizons: Vec<f64>,
        samples: usize,
        seed: u64,
        #[serde(default = "default_window")]
        window: f64,
        #[serde(default = "default_ic_range")]
        initial_range: [f64; 2],
    },
    /// Brute-force piecewise-constant search compared with the sweep.
    Oracle {
        segments: usize,
        levels: usize,
        #[serde(default)]
        mode: OracleMode,
        #[serde(default)]
        n_steps: Option<usize>,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Solve {} => "solve",
            Experiment::SweepEpsilon { .. } => "sweep_epsilon",
            Experiment::SweepAlpha { .. } => "sweep_alpha",
            Experiment::Perturb { .. } => "perturb",
            Experiment::Classify { .. } => "classify",
            Experiment::Robustness { .. } => "robustness",
            Experiment::Oracle { .. } => "oracle",
        }
    }
}

/// Errors from reading a scenario; both map to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] crate::error::Error),
}

impl Scenario {
    /// Checks the model, the solver and the experiment fields.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.solver.validate()?;
        let th = &self.thresholds;
        for (key, v) in [
            ("thresholds.low", th.low),
            ("thresholds.high", th.high),
            ("thresholds.flat", th.flat),
            ("thresholds.flat_horizon", th.flat_horizon),
        ] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(invalid(key, format!("must lie in [0, 1], got {v}")));
            }
        }
        match &self.experiment {
            Experiment::Solve {} => {}
            Experiment::SweepEpsilon { values } => {
                if values.is_empty() {
                    return Err(invalid("experiment.values", "must not be empty"));
                }
                for &eps in values {
                    ModelParams {
                        epsilon: eps,
                        ..self.params
                    }
                    .validate()?;
                }
            }
            Experiment::SweepAlpha { values } => {
                if values.is_empty() {
                    return Err(invalid("experiment.values", "must not be empty"));
                }
                for &alpha in values {
                    ModelParams { alpha, ..self.params }.validate()?;
                }
            }
            Experiment::Perturb { order } => {
                crate::perturbation::Order::try_from(*order)?;
                if self.params.epsilon.is_infinite() {
                    return Err(invalid("params.epsilon", "perturb needs a finite epsilon"));
                }
            }
            Experiment::Classify {
                u1,
                u2,
                lambda_box,
                field_points,
            } => {
                if !(u1.is_finite() && (0.0..=self.params.u1max).contains(u1)) {
                    return Err(invalid("experiment.u1", format!("must lie in [0, u1max], got {u1}")));
                }
                if !(u2.is_finite() && (0.0..=self.params.u2max).contains(u2)) {
                    return Err(invalid("experiment.u2", format!("must lie in [0, u2max], got {u2}")));
                }
                for [lo, hi] in lambda_box {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(invalid("experiment.lambda_box", format!("needs lo < hi, got [{lo}, {hi}]")));
                    }
                }
                if *field_points < 2 {
                    return Err(invalid("experiment.field_points", "must be >= 2"));
                }
            }
            Experiment::Robustness {
                horizons,
                samples,
                window,
                initial_range,
                ..
            } => {
                if horizons.is_empty() {
                    return Err(invalid("experiment.horizons", "must not be empty"));
                }
                if *samples < 1 {
                    return Err(invalid("experiment.samples", "must be >= 1"));
                }
                if !(window.is_finite() && *window > 0.0) {
                    return Err(invalid("experiment.window", format!("must be > 0, got {window}")));
                }
                for &t in horizons {
                    if !(t.is_finite() && t > 0.0) {
                        return Err(invalid("experiment.horizons", format!("must be > 0, got {t}")));
                    }
                    let count = (t / window).round();
                    if count < 1.0 || (count * window - t).abs() > 1e-9 * t {
                        return Err(invalid("experiment.window", format!("{window} does not divide T = {t}")));
                    }
                }
                let [lo, hi] = *initial_range;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(invalid("experiment.initial_range", format!("needs lo < hi, got [{lo}, {hi}]")));
                }
            }
            Experiment::Oracle {
                segments,
                levels,
                n_steps,
                ..
            } => {
                if *segments < 1 {
                    return Err(invalid("experiment.segments", "must be >= 1"));
                }
                if *levels < 2 {
                    return Err(invalid("experiment.levels", "must be >= 2"));
                }
                if let Some(n) = n_steps {
                    if *n < 2 {
                        return Err(invalid("experiment.n_steps", "must be >= 2"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical text: pretty JSON with fixed key order and a final newline.
    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> std::result::Result<Scenario, ScenarioError> {
    let s: Scenario = serde_json::from_str(text)?;
    s.validate()?;
    Ok(s)
}

/// Scenario key reference printed by `--help`.
pub const FORMAT_HELP: &str = "\
SCENARIO FORMAT (JSON, unknown keys rejected)
  params                 model constants, all required
    r1, r2               return rates (> 0)
    xbar1, xbar2         natural dispositions
    alpha                payoff weight of spouse 1, in [0, 1]
    epsilon              cost scale (> 0) or \"infinite\"
    u0                   ideal interaction level, 0 <= u0 <= min(u1max, u2max)
    u1max, u2max         control bounds (> 0)
    T                    horizon (> 0)
    x1_0, x2_0           initial positivity
  solver                 optional sweep settings
    n_steps              grid intervals (default 1000)
    tolerance            relative change tolerance (default 0.001)
    relaxation           control update weight in (0, 1] (default 0.5)
    max_iters            iteration cap (default 500)
    initial_u1, initial_u2  constant initial guesses (default u0)
  thresholds             optional style thresholds, fractions of u_max
    low (0.15), high (0.7), flat (0.1), flat_horizon (0.8)
  allow_nonconverged     record non-convergence instead of failing (default false)
  experiment             object with a \"kind\" key:
    solve                no further keys
    sweep_epsilon        values: list of epsilons
    sweep_alpha          values: list of alphas
    perturb              order: 0 or 1 (default 1)
    classify             u1, u2 frozen controls; lambda_box [[lo, hi], [lo, hi]]
                         (default [[-1, 3], [-1, 3]]); field_points (default 21)
    robustness           horizons: list of T; samples; seed (ChaCha8);
                         window (default 1); initial_range [lo, hi] (default [-1, 1])
    oracle               segments; levels; mode: auto | exhaustive |
                         coordinate_descent (default auto); n_steps (default solver.n_steps)
";
