//! `sweep` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 projection budget exhausted,
//! 3 solve aborted by a failed projection, 4 a reported check failed.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;
use sweep_core::export::{
    audit_json, fmt_real, projection_json, real, rate_csv, rate_json, to_json_text, trajectory_csv, trajectory_json,
};
use sweep_core::harness::rate_study;
use sweep_core::oracles::{approx_project_with, Method, OracleError};
use sweep_core::perturbation::check_perturbation;
use sweep_core::solver::{solve, theorem1_audit, SolverError, SweepingProblem, Trajectory};

pub use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_SOLVE_ABORT: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "sweep", version, about = "Catching-up solver for sweeping processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for sampled diagnostics (overrides `seed`).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Keep going when a step misses its certificate.
    #[arg(long, global = true)]
    pub permissive: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// One certified projection; prints the result as JSON.
    Project,
    /// Solve on one grid; writes the trajectory and the audit.
    Solve,
    /// Convergence study over a ladder of grids.
    Rate,
    /// Solve and print the bound audit.
    Audit,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<i32> {
    let path = cli.config.as_deref().ok_or_else(|| ConfigError("--config is required".into()))?;
    let cfg = RunConfig::from_path(path)?;
    let out = cfg.out_dir(cli.out.as_deref()).to_path_buf();
    match cli.command {
        Command::Project => cmd_project(&cfg, cli.out.as_deref()),
        Command::Solve => cmd_solve(&cfg, &out, cli.seed, cli.permissive),
        Command::Rate => cmd_rate(&cfg, &out, cli.permissive),
        Command::Audit => cmd_audit(&cfg, &out, cli.permissive),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn print(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

/// Prints the projection of `point` onto `[set]`.
pub fn cmd_project(cfg: &RunConfig, out: Option<&Path>) -> anyhow::Result<i32> {
    let set = cfg.target_set()?;
    let x = cfg.point()?;
    let method = cfg.method()?.unwrap_or(Method::Auto);
    let (result, code) = match approx_project_with(&set, &x, &cfg.projector(), method) {
        Ok(r) => (r, EXIT_OK),
        Err(OracleError::BudgetExhausted(r)) => {
            eprintln!("projection budget exhausted with certificate {}", fmt_real(r.certified_eps));
            (*r, EXIT_BUDGET)
        }
        Err(e) => return Err(ConfigError(e.to_string()).into()),
    };
    let text = to_json_text(&projection_json(&result));
    print(&text);
    if let Some(dir) = out {
        write(dir, "project.json", &text)?;
    }
    Ok(code)
}

/// Solve outcome: the (possibly partial) trajectory and the abort message.
fn run_solve(problem: &SweepingProblem, n: usize, cfg: &RunConfig) -> anyhow::Result<(Trajectory, Option<String>)> {
    match solve(problem, n, &cfg.schedule()?) {
        Ok(t) => Ok((t, None)),
        Err(e @ SolverError::ProjectionFailed { .. }) => {
            let msg = e.to_string();
            let SolverError::ProjectionFailed { partial, .. } = e else { unreachable!() };
            eprintln!("error: {msg}");
            Ok((*partial, Some(msg)))
        }
        Err(e) => Err(ConfigError(e.to_string()).into()),
    }
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path, seed: Option<u64>, permissive: bool) -> anyhow::Result<i32> {
    let problem = cfg.problem(permissive)?;
    let (traj, error) = run_solve(&problem, cfg.n()?, cfg)?;
    let audit = theorem1_audit(&traj, &problem)?;
    let seed = cfg.seed(seed);

    let lipschitz = problem.set.check_lipschitz(problem.horizon, 16, 64, seed)?;
    let radius = 2.0 * problem.x0.norm().max(1.0);
    let pert = check_perturbation(&problem.selection, problem.dim(), problem.horizon, radius, 64, seed)?;
    let mut json = trajectory_json(&cfg.problem, &traj, Some(&audit), error.as_deref());
    json["sampled_checks"] = json!({
        "seed": seed,
        "lipschitz_declared": real(lipschitz.declared),
        "lipschitz_observed": real(lipschitz.observed),
        "lipschitz_passed": lipschitz.passed,
        "perturbation_passed": pert.passed(),
    });

    write(out, "trajectory.csv", &trajectory_csv(&traj))?;
    write(out, "trajectory.json", &to_json_text(&json))?;
    Ok(if error.is_some() {
        EXIT_SOLVE_ABORT
    } else if audit.passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

pub fn cmd_rate(cfg: &RunConfig, out: &Path, permissive: bool) -> anyhow::Result<i32> {
    let id = cfg.catalog_id()?.ok_or_else(|| ConfigError("`rate` needs a catalog problem".into()))?;
    let problem = cfg.problem(permissive)?;
    let ladder = cfg.ladder()?;
    let study = match rate_study(&problem, id, &ladder, &cfg.schedule()?, cfg.reference()) {
        Ok(s) => s,
        Err(sweep_core::harness::HarnessError::Solver(e @ SolverError::ProjectionFailed { .. })) => {
            eprintln!("error: {e}");
            return Ok(EXIT_SOLVE_ABORT);
        }
        Err(e) => return Err(ConfigError(e.to_string()).into()),
    };
    write(out, "rate.csv", &rate_csv(&study))?;
    write(out, "rate.json", &to_json_text(&rate_json(&study)))?;
    Ok(if study.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn cmd_audit(cfg: &RunConfig, out: &Path, permissive: bool) -> anyhow::Result<i32> {
    let problem = cfg.problem(permissive)?;
    let (traj, error) = run_solve(&problem, cfg.n()?, cfg)?;
    let report = theorem1_audit(&traj, &problem)?;
    let text = to_json_text(&audit_json(&report));
    print(&text);
    write(out, "audit.json", &text)?;
    Ok(if error.is_some() {
        EXIT_SOLVE_ABORT
    } else if report.passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}
