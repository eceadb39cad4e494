//! Catching-up algorithm with approximate projections.
//!
//! On the grid `t_k = kT/n` the nodes follow
//! `x_{k+1} in proj^{eps_n}_{C(t_{k+1})}(x_k + int_{t_k}^{t_{k+1}} f(s, x_k) ds)`
//! and the trajectory between nodes is the piecewise interpolant
//! `x_n(t) = x_k + (t - t_k)/mu (x_{k+1} - x_k - I_k) + int_{t_k}^t f(s, x_k) ds`.

mod audit;

pub use audit::{theorem1_audit, AuditReport, BoundCheck, TheoremConstants};

use thiserror::Error;

use crate::geometry::{distance, residual, MovingSet};
use crate::oracles::{approx_project_with, Method, OracleError, ProjectorConfig};
use crate::perturbation::Selection;
use crate::Vector;

/// Uniform grid on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    horizon: f64,
    n: usize,
}

impl Grid {
    pub fn new(horizon: f64, n: usize) -> Result<Self, SolverError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SolverError::InvalidProblem(format!("horizon T = {horizon} must be positive")));
        }
        if n == 0 {
            return Err(SolverError::InvalidProblem("n must be >= 1".into()));
        }
        Ok(Self { horizon, n })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> f64 {
        self.horizon / self.n as f64
    }

    /// `t_k = kT/n`, computed directly rather than accumulated.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.n {
            self.horizon
        } else {
            k as f64 * self.horizon / self.n as f64
        }
    }

    /// Index `k` with `t in [t_k, t_{k+1})`; `n - 1` at `t = T`.
    pub fn cell(&self, t: f64) -> usize {
        let mut k = ((t / self.horizon) * self.n as f64).floor().clamp(0.0, (self.n - 1) as f64) as usize;
        while k > 0 && self.node(k) > t {
            k -= 1;
        }
        while k + 1 < self.n && self.node(k + 1) <= t {
            k += 1;
        }
        k
    }

    /// `delta_n(t) = t_k`.
    pub fn delta(&self, t: f64) -> f64 {
        self.node(self.cell(t))
    }

    /// `theta_n(t) = t_{k+1}`.
    pub fn theta(&self, t: f64) -> f64 {
        self.node(self.cell(t) + 1)
    }
}

/// `eps_n = c mu_n^p` with `p > 2`, so that `eps_n / mu_n^2 -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsSchedule {
    c: f64,
    p: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        Self { c: 1.0, p: 3.0 }
    }
}

impl EpsSchedule {
    pub fn new(c: f64, p: f64) -> Result<Self, SolverError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(SolverError::InvalidProblem(format!("schedule constant c = {c} must be positive")));
        }
        if !(p > 2.0 && p.is_finite()) {
            return Err(SolverError::InvalidProblem(format!(
                "schedule exponent p = {p} must exceed 2 so that eps_n / mu_n^2 -> 0"
            )));
        }
        Ok(Self { c, p })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps(&self, mu: f64) -> f64 {
        self.c * mu.powf(self.p)
    }

    /// `sup_n sqrt(eps_n) / mu_n = sqrt(c) T^{p/2 - 1}`, attained at `n = 1`.
    pub fn sup_ratio(&self, horizon: f64) -> f64 {
        self.c.sqrt() * horizon.powf(self.p / 2.0 - 1.0)
    }
}

/// Which convergence theory a run is validated against. The stepper is the same.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    ProxRegular(f64),
    Subsmooth,
    FixedSet,
}

/// Projection route and budget used at every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub method: Method,
    pub max_iter: usize,
    pub feas_tol: f64,
    /// Accept steps whose certificate exceeds `eps_n` instead of aborting.
    pub permissive: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { method: Method::Auto, max_iter: 100_000, feas_tol: 1e-10, permissive: false }
    }
}

#[derive(Debug, Clone)]
pub struct SweepingProblem {
    pub set: MovingSet,
    pub selection: Selection,
    pub x0: Vector,
    pub horizon: f64,
    pub mode: SolveMode,
    pub options: SolverOptions,
}

impl SweepingProblem {
    pub fn new(
        set: MovingSet,
        selection: Selection,
        x0: Vector,
        horizon: f64,
        mode: SolveMode,
        options: SolverOptions,
    ) -> Result<Self, SolverError> {
        Grid::new(horizon, 1)?;
        let c0 = set.at(0.0);
        if c0.dim() != x0.len() {
            return Err(SolverError::InvalidProblem(format!(
                "x0 has dimension {}, the set has dimension {}",
                x0.len(),
                c0.dim()
            )));
        }
        let r = residual(&c0, &x0);
        if !(r <= options.feas_tol) {
            return Err(SolverError::InvalidProblem(format!("x0 is not in C(0): residual {r:e}")));
        }
        match mode {
            SolveMode::FixedSet if !set.is_fixed() => {
                return Err(SolverError::InvalidProblem("fixed-set mode needs a fixed set".into()));
            }
            SolveMode::ProxRegular(rho) if !(rho > 0.0) => {
                return Err(SolverError::InvalidProblem(format!("prox-regularity radius {rho} must be positive")));
            }
            _ => {}
        }
        Ok(Self { set, selection, x0, horizon, mode, options })
    }

    /// `L_C`; zero in fixed-set mode.
    pub fn lipschitz_c(&self) -> f64 {
        match self.mode {
            SolveMode::FixedSet => 0.0,
            _ => self.set.lipschitz(),
        }
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }
}

/// Per-step record.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// `tau = x_k + I_k`.
    pub predictor: Vector,
    /// Upper bound on `d_{C(t_{k+1})}(tau)`.
    pub predictor_distance: f64,
    pub certified_eps: f64,
    pub iterations: usize,
    /// `lambda = 4 sqrt(eps_n) + (L_C + h(x_k) + sqrt(gamma)) mu_n`.
    pub budget: f64,
    pub h_xk: f64,
    /// Certificate above `eps_n` (only kept in permissive runs).
    pub failed: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub schedule: EpsSchedule,
    pub eps: f64,
    pub nodes: Vec<Vector>,
    /// `I_k = int_{t_k}^{t_{k+1}} f(s, x_k) ds`.
    pub integrals: Vec<Vector>,
    pub steps: Vec<StepDiagnostics>,
    selection: Selection,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("projection failed at step {step}: {source}")]
    ProjectionFailed {
        step: usize,
        source: OracleError,
        /// Nodes up to and including `x_step`, plus the rejected step.
        partial: Box<Trajectory>,
    },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("time {0} outside the grid")]
    OutOfRange(f64),
}

impl SolverError {
    pub fn partial_trajectory(&self) -> Option<&Trajectory> {
        match self {
            SolverError::ProjectionFailed { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Outcome of a step whose certificate missed `eps_n`.
#[derive(Debug)]
pub struct StepFailure {
    pub source: OracleError,
    /// Feasible point and diagnostics when the oracle produced one.
    pub partial: Option<(Vector, Vector, StepDiagnostics)>,
}

/// One step of the recursion from `x_k` at `t_k`. Returns `(x_{k+1}, I_k, diagnostics)`.
pub fn step(
    problem: &SweepingProblem,
    grid: &Grid,
    k: usize,
    x_k: &Vector,
    eps: f64,
) -> Result<(Vector, Vector, StepDiagnostics), StepFailure> {
    let fail = |source: OracleError| StepFailure { source, partial: None };
    let (t0, t1) = (grid.node(k), grid.node(k + 1));
    let integral = problem.selection.cell_integral(x_k, t0, t1).map_err(fail)?;
    let tau = x_k + &integral;
    let set = problem.set.at(t1);
    let cfg = ProjectorConfig { eps, max_iter: problem.options.max_iter, feas_tol: problem.options.feas_tol };
    let predictor_distance = distance(&set, &tau).map_err(|e| fail(e.into()))?.value;
    let h_xk = problem.selection.perturbation.h(x_k);
    let budget = 4.0 * eps.sqrt() + (problem.lipschitz_c() + h_xk + problem.selection.gamma.sqrt()) * grid.mu();
    let diag = |certified_eps: f64, iterations: usize, failed: bool| StepDiagnostics {
        predictor: tau.clone(),
        predictor_distance,
        certified_eps,
        iterations,
        budget,
        h_xk,
        failed,
    };
    match approx_project_with(&set, &tau, &cfg, problem.options.method) {
        Ok(r) => {
            let d = diag(r.certified_eps, r.iterations, false);
            Ok((r.point, integral, d))
        }
        Err(OracleError::BudgetExhausted(r)) => {
            let d = diag(r.certified_eps, r.iterations, true);
            let point = r.point.clone();
            Err(StepFailure { source: OracleError::BudgetExhausted(r), partial: Some((point, integral, d)) })
        }
        Err(e) => Err(fail(e)),
    }
}

/// Runs the recursion for `k = 0 .. n-1`.
pub fn solve(problem: &SweepingProblem, n: usize, schedule: &EpsSchedule) -> Result<Trajectory, SolverError> {
    let grid = Grid::new(problem.horizon, n)?;
    let eps = schedule.eps(grid.mu());
    let mut traj = Trajectory {
        grid,
        schedule: *schedule,
        eps,
        nodes: Vec::with_capacity(n + 1),
        integrals: Vec::with_capacity(n),
        steps: Vec::with_capacity(n),
        selection: problem.selection.clone(),
    };
    traj.nodes.push(problem.x0.clone());
    for k in 0..n {
        let x_k = &traj.nodes[k];
        match step(problem, &grid, k, x_k, eps) {
            Ok((x, i, d)) => traj.push(x, i, d),
            Err(StepFailure { partial: Some((x, i, d)), .. }) if problem.options.permissive => traj.push(x, i, d),
            Err(StepFailure { source, partial }) => {
                if let Some((x, i, d)) = partial {
                    traj.push(x, i, d);
                }
                return Err(SolverError::ProjectionFailed { step: k, source, partial: Box::new(traj) });
            }
        }
    }
    Ok(traj)
}

/// One-sided choice for velocities at grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Trajectory {
    fn push(&mut self, x: Vector, integral: Vector, diag: StepDiagnostics) {
        self.nodes.push(x);
        self.integrals.push(integral);
        self.steps.push(diag);
    }

    /// Number of completed cells.
    pub fn completed(&self) -> usize {
        self.steps.len()
    }

    pub fn is_complete(&self) -> bool {
        self.completed() == self.grid.n()
    }

    /// Indices of steps whose certificate exceeded `eps_n`.
    pub fn failed_cells(&self) -> Vec<usize> {
        self.steps.iter().enumerate().filter(|(_, s)| s.failed).map(|(k, _)| k).collect()
    }

    pub fn selection(&self) -> &Selection {
        &self.selection
    }

    fn covered_horizon(&self) -> f64 {
        self.grid.node(self.completed())
    }

    fn check_time(&self, t: f64) -> Result<(), SolverError> {
        if (0.0..=self.covered_horizon()).contains(&t) {
            Ok(())
        } else {
            Err(SolverError::OutOfRange(t))
        }
    }

    fn within_cell(&self, k: usize, t: f64) -> Result<Vector, SolverError> {
        let t0 = self.grid.node(k);
        let x_k = &self.nodes[k];
        let partial = self.selection.cell_integral(x_k, t0, t)?;
        let s = (t - t0) / self.grid.mu();
        Ok(x_k + (&self.nodes[k + 1] - x_k - &self.integrals[k]) * s + partial)
    }

    /// `x_n(t)`; reproduces the nodes exactly at grid points.
    pub fn interpolate(&self, t: f64) -> Result<Vector, SolverError> {
        self.check_time(t)?;
        let k = self.grid.cell(t).min(self.completed().saturating_sub(1));
        if self.completed() == 0 || t == self.grid.node(k) {
            return Ok(self.nodes[k].clone());
        }
        if t == self.grid.node(k + 1) {
            return Ok(self.nodes[k + 1].clone());
        }
        self.within_cell(k, t)
    }

    /// `x_n'(t) = (x_{k+1} - x_k - I_k)/mu + f(t, x_k)` inside a cell. At a node
    /// a side must be given.
    pub fn velocity(&self, t: f64, side: Option<Side>) -> Result<Vector, SolverError> {
        self.check_time(t)?;
        if self.completed() == 0 {
            return Err(SolverError::OutOfRange(t));
        }
        let mut k = self.grid.cell(t).min(self.completed() - 1);
        let at_node = t == self.grid.node(k) || t == self.grid.node(k + 1);
        if at_node {
            let node = if t == self.grid.node(k) { k } else { k + 1 };
            k = match side {
                Some(Side::Left) if node > 0 => node - 1,
                Some(Side::Right) if node < self.completed() => node,
                _ => return Err(SolverError::OutOfRange(t)),
            };
        }
        let x_k = &self.nodes[k];
        let f = self.selection.eval(t, x_k)?;
        Ok((&self.nodes[k + 1] - x_k - &self.integrals[k]) / self.grid.mu() + f)
    }
}

#[cfg(test)]
mod tests;
