//! Command-line front end: scenario files in, CSV and JSON out.
//!
//! Exit codes: 0 success, 2 invalid input, 3 non-convergence, 4 I/O.

mod output;
mod run;
mod scenario;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};

pub use output::{influence_csv, num, trajectory_csv, FileEntry, INFLUENCE_HEADER, TRAJECTORY_HEADER};
pub use run::{
    draw_initial_conditions, list_outputs, point_dir, run_scenario, EquilibriumSummary, OracleSummary,
    PerturbationSummary, PointSummary, RobustnessSummary, RunError, RunManifest, RunOptions, GENERATOR,
    MANIFEST_NAME,
};
pub use scenario::{parse_scenario, Experiment, Scenario, ScenarioError, FORMAT_HELP};

use crate::analysis::{classify_adjoint_equilibrium, singularity_report, SINGULAR_TOL};

/// Scenario files shipped with the crate, by name.
pub const SHIPPED_SCENARIOS: &[(&str, &str)] = &[
    ("example1", include_str!("../../scenarios/example1.json")),
    ("example2", include_str!("../../scenarios/example2.json")),
    ("epsilon_sweep", include_str!("../../scenarios/epsilon_sweep.json")),
    ("alpha_sweep", include_str!("../../scenarios/alpha_sweep.json")),
    ("adjoint_phase", include_str!("../../scenarios/adjoint_phase.json")),
    ("robustness", include_str!("../../scenarios/robustness.json")),
    ("perturb_example2", include_str!("../../scenarios/perturb_example2.json")),
    ("oracle_example1", include_str!("../../scenarios/oracle_example1.json")),
];

/// Scenarios whose outputs make up the full set of figure data.
pub const FIGURE_SCENARIOS: &[&str] = &["adjoint_phase", "example1", "epsilon_sweep", "alpha_sweep", "robustness"];

pub fn shipped_scenario(name: &str) -> Option<&'static str> {
    SHIPPED_SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Parser)]
#[command(
    name = "marriage-oc",
    version,
    about = "Optimal interaction strategies for a two-spouse positivity model",
    after_long_help = FORMAT_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (JSON); see --help for the format.
    #[arg(long, global = true, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides the seed of randomized experiments.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Records non-convergence in the manifest and exits 0.
    #[arg(long, global = true)]
    pub allow_nonconverged: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a `solve` scenario with the forward-backward sweep.
    Solve,
    /// Run a `sweep_epsilon` or `sweep_alpha` scenario.
    Sweep,
    /// Compare the sweep with the small-epsilon expansion.
    Perturb,
    /// Classify the adjoint fixed point for frozen controls.
    ClassifyEquilibrium {
        /// Frozen control of spouse 1 (default: scenario value or u0).
        #[arg(long)]
        u1: Option<f64>,
        #[arg(long)]
        u2: Option<f64>,
    },
    /// Report the conditions for singular controls.
    Singularity,
    /// Brute-force piecewise-constant search.
    Oracle,
    /// Influence-slope study over random initial conditions.
    Robustness,
    /// Regenerate all figure data from the shipped scenarios into --out.
    Figures,
}

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    code
}

fn usage_error(msg: &str) -> i32 {
    let usage = Cli::command().render_usage();
    eprintln!("error: {msg}\n\n{usage}\n\nFor more information, try '--help'.");
    2
}

fn load(path: &Path) -> Result<Scenario, i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage_error(&format!("cannot read scenario {}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| fail(2, e))
}

fn print_summary(m: &RunManifest) {
    println!("kind: {}", m.kind);
    println!("converged: {}", m.converged);
    for p in &m.points {
        let label = if p.label.is_empty() { "." } else { &p.label };
        let styles = p
            .styles
            .as_ref()
            .map(|v| format!("{} {}", v.spouse1.label, v.spouse2.label))
            .unwrap_or_else(|| "-".into());
        let obj = p.objective_value.map_or("-".into(), |v| v.to_string());
        println!(
            "{label}: converged={} iterations={} objective={obj} styles={styles}",
            p.converged, p.iterations
        );
    }
    let eq = &m.equilibrium.report;
    println!(
        "equilibrium: {} mu_plus={} mu_minus={}",
        eq.classification, eq.mu_plus, eq.mu_minus
    );
    if let Some(o) = &m.oracle {
        println!(
            "oracle: objective={} sweep_objective={} candidates={}",
            o.objective_value, o.sweep_objective_value, o.candidates_evaluated
        );
    }
    if let Some(pt) = &m.perturbation {
        println!("perturbation: sup_norm_difference={}", pt.sup_norm_difference);
    }
    println!("files: {}", m.files.len());
}

fn expect_kind(s: &Scenario, allowed: &[&str], cmd: &str) -> Result<(), i32> {
    let kind = s.experiment.kind();
    if allowed.contains(&kind) {
        Ok(())
    } else {
        Err(fail(
            2,
            format!("`{cmd}` needs a scenario of kind {}, got `{kind}`", allowed.join(" or ")),
        ))
    }
}

fn execute(s: &Scenario, out: &Path, opts: RunOptions) -> i32 {
    match run_scenario(s, out, opts) {
        Ok(m) => {
            print_summary(&m);
            0
        }
        Err(e) => fail(e.exit_code(), e),
    }
}

fn run_figures(out: &Path, opts: RunOptions) -> i32 {
    for name in FIGURE_SCENARIOS {
        let text = shipped_scenario(name).expect("figure scenario is shipped");
        let s = match parse_scenario(text) {
            Ok(s) => s,
            Err(e) => return fail(2, format!("{name}: {e}")),
        };
        println!("== {name}");
        let code = execute(&s, &out.join(name), opts);
        if code != 0 {
            return code;
        }
    }
    0
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let opts = RunOptions {
        allow_nonconverged: cli.allow_nonconverged,
        seed: cli.seed,
    };
    if let Command::Figures = cli.command {
        return match &cli.out {
            Some(out) => run_figures(out, opts),
            None => usage_error("`figures` needs --out <DIR>"),
        };
    }
    let Some(path) = &cli.scenario else {
        return usage_error("--scenario <PATH> is required");
    };
    let mut s = match load(path) {
        Ok(s) => s,
        Err(code) => return code,
    };

    let needs_out = |out: &Option<PathBuf>| match out {
        Some(o) => Ok(o.clone()),
        None => Err(usage_error("--out <DIR> is required for this command")),
    };
    let (allowed, name): (&[&str], &str) = match &cli.command {
        Command::Solve => (&["solve"], "solve"),
        Command::Sweep => (&["sweep_epsilon", "sweep_alpha"], "sweep"),
        Command::Perturb => (&["perturb"], "perturb"),
        Command::Oracle => (&["oracle"], "oracle"),
        Command::Robustness => (&["robustness"], "robustness"),
        Command::Singularity => {
            let report = singularity_report(&s.params, SINGULAR_TOL);
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{text}");
            if let Some(out) = &cli.out {
                let written = std::fs::create_dir_all(out)
                    .and_then(|_| std::fs::write(out.join("singularity.json"), format!("{text}\n")));
                if let Err(e) = written {
                    return fail(4, e);
                }
            }
            return 0;
        }
        Command::ClassifyEquilibrium { u1, u2 } => {
            let (def1, def2) = match &s.experiment {
                Experiment::Classify { u1, u2, .. } => (*u1, *u2),
                _ => (s.params.u0, s.params.u0),
            };
            let (u1, u2) = (u1.unwrap_or(def1), u2.unwrap_or(def2));
            let Some(out) = &cli.out else {
                let r = classify_adjoint_equilibrium(&s.params, u1, u2);
                println!("{}", r.classification);
                println!("mu_plus: {}", r.mu_plus);
                println!("mu_minus: {}", r.mu_minus);
                match r.point {
                    Some(pt) => println!("fixed_point: {} {}", pt.lam1, pt.lam2),
                    None => println!("fixed_point: none"),
                }
                return 0;
            };
            s.experiment = match s.experiment {
                Experiment::Classify {
                    lambda_box,
                    field_points,
                    ..
                } => Experiment::Classify {
                    u1,
                    u2,
                    lambda_box,
                    field_points,
                },
                _ => Experiment::Classify {
                    u1,
                    u2,
                    lambda_box: [[-1.0, 3.0], [-1.0, 3.0]],
                    field_points: 21,
                },
            };
            return execute(&s, out, opts);
        }
        Command::Figures => unreachable!("handled above"),
    };
    if let Err(code) = expect_kind(&s, allowed, name) {
        return code;
    }
    match needs_out(&cli.out) {
        Ok(out) => execute(&s, &out, opts),
        Err(code) => code,
    }
}
