//! Problem catalog with closed-form solutions, convergence-rate studies and
//! stability experiments for approximate projections.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{exact_project, MovingSet, SetDescription};
use crate::oracles::{approx_project_with, Method, OracleError, ProjectorConfig};
use crate::perturbation::{Perturbation, Selection, DEFAULT_GAMMA};
use crate::solver::{solve, EpsSchedule, SolveMode, SolverError, SolverOptions, SweepingProblem, Trajectory};
use crate::Vector;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid study: {0}")]
    InvalidStudy(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Catalog problems, all on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    /// `C(t) = [t, t+1]`, `x0 = 0`, `F = 0`; `x(t) = t`.
    DraggingInterval,
    /// `C(t) = {x_1 >= t}`, `x0 = 0`, `F = 0`; `x(t) = (t, 0)`.
    TranslatingHalfspace,
    /// `C = B(0, 10)`, `F = {-x}`, `x0 = (1, 0)`; `x(t) = x0 e^{-t}`.
    InteriorOde,
    /// `C(t) = B((t, 0), 1)`, `x0 = (-1, 0)`, `F = 0`; `x(t) = (t - 1, 0)`.
    TranslatingDisk,
}

impl ProblemId {
    pub const ALL: [ProblemId; 4] =
        [ProblemId::DraggingInterval, ProblemId::TranslatingHalfspace, ProblemId::InteriorOde, ProblemId::TranslatingDisk];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemId::DraggingInterval => "dragging-interval",
            ProblemId::TranslatingHalfspace => "translating-halfspace",
            ProblemId::InteriorOde => "interior-ode",
            ProblemId::TranslatingDisk => "translating-disk",
        }
    }

    /// Projection route used by default: Frank–Wolfe for the disk, closed forms elsewhere.
    pub fn default_method(&self) -> Method {
        match self {
            ProblemId::TranslatingDisk => Method::FrankWolfe,
            _ => Method::Auto,
        }
    }

    pub fn horizon(&self) -> f64 {
        1.0
    }

    /// Fixed seed per problem for any sampled diagnostics.
    pub fn seed(&self) -> u64 {
        match self {
            ProblemId::DraggingInterval => 0x5eed_0001,
            ProblemId::TranslatingHalfspace => 0x5eed_0002,
            ProblemId::InteriorOde => 0x5eed_0003,
            ProblemId::TranslatingDisk => 0x5eed_0004,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| HarnessError::UnknownProblem(s.to_string()))
    }
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_vec(xs.to_vec())
}

/// Builds a catalog problem with the given projection options.
pub fn catalog_problem(id: ProblemId, options: SolverOptions, gamma: f64) -> Result<SweepingProblem, HarnessError> {
    let convex = SolveMode::ProxRegular(f64::INFINITY);
    let zero = |d| Selection::new(Perturbation::zero(d), gamma);
    let (set, selection, x0, mode) = match id {
        ProblemId::DraggingInterval => {
            let base = SetDescription::boxed(v(&[0.0]), v(&[1.0])).expect("valid box");
            (MovingSet::Translating { base, velocity: v(&[1.0]) }, zero(1)?, v(&[0.0]), convex)
        }
        ProblemId::TranslatingHalfspace => {
            let base = SetDescription::halfspace(v(&[1.0, 0.0]), 0.0).expect("valid halfspace");
            (MovingSet::Translating { base, velocity: v(&[1.0, 0.0]) }, zero(2)?, v(&[0.0, 0.0]), convex)
        }
        ProblemId::InteriorOde => {
            let ball = SetDescription::ball(v(&[0.0, 0.0]), 10.0).expect("valid ball");
            let sel = Selection::new(Perturbation::linear_decay(), gamma)?;
            (MovingSet::Fixed(ball), sel, v(&[1.0, 0.0]), SolveMode::FixedSet)
        }
        ProblemId::TranslatingDisk => {
            let base = SetDescription::ball(v(&[0.0, 0.0]), 1.0).expect("valid ball");
            (MovingSet::Translating { base, velocity: v(&[1.0, 0.0]) }, zero(2)?, v(&[-1.0, 0.0]), convex)
        }
    };
    Ok(SweepingProblem::new(set, selection, x0, id.horizon(), mode, options)?)
}

/// Catalog problem with its default route and `gamma`.
pub fn default_problem(id: ProblemId) -> SweepingProblem {
    let options = SolverOptions { method: id.default_method(), ..SolverOptions::default() };
    catalog_problem(id, options, DEFAULT_GAMMA).expect("catalog problems are valid")
}

/// Closed-form solution of a catalog problem.
pub fn reference_solution(id: ProblemId, t: f64) -> Vector {
    match id {
        ProblemId::DraggingInterval => v(&[t]),
        ProblemId::TranslatingHalfspace => v(&[t, 0.0]),
        ProblemId::InteriorOde => v(&[(-t).exp(), 0.0]),
        ProblemId::TranslatingDisk => v(&[t - 1.0, 0.0]),
    }
}

/// [`reference_solution`] by catalog name.
pub fn reference_solution_by_name(name: &str, t: f64) -> Result<Vector, HarnessError> {
    Ok(reference_solution(name.parse()?, t))
}

/// `sqrt(sqrt(eps) + mu + sqrt(eps)/mu)`: the rate bound on `||x_n - x||` with unit constant.
pub fn rate_bound(mu: f64, eps: f64) -> f64 {
    (eps.sqrt() + mu + eps.sqrt() / mu).sqrt()
}

/// Number of evaluation times used for sup-errors.
pub const EVAL_POINTS: usize = 1000;

/// `EVAL_POINTS` equally spaced times covering `[0, T]`.
pub fn eval_grid(horizon: f64) -> Vec<f64> {
    (0..EVAL_POINTS)
        .map(|j| if j + 1 == EVAL_POINTS { horizon } else { j as f64 * horizon / (EVAL_POINTS - 1) as f64 })
        .collect()
}

/// `max_t ||x_n(t) - reference(t)||` over the evaluation grid.
pub fn sup_error<R>(traj: &Trajectory, reference: R) -> Result<f64, HarnessError>
where
    R: Fn(f64) -> Result<Vector, HarnessError>,
{
    let mut worst = 0.0_f64;
    for t in eval_grid(traj.grid.horizon()) {
        worst = worst.max((traj.interpolate(t)? - reference(t)?).norm());
    }
    Ok(worst)
}

/// What the ladder is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ReferenceSpec {
    ClosedForm,
    /// Self-consistent solve on a fine grid with `n_ref >= 4 max(ladder)`.
    FineGrid { n_ref: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEntry {
    pub n: usize,
    pub mu: f64,
    pub eps: f64,
    pub error: f64,
}

/// Agreement of the fine-grid reference with the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGate {
    pub n_ref: usize,
    pub deviation: f64,
    /// `2 * rate_bound(mu_ref, eps_ref)`.
    pub bound: f64,
    pub passed: bool,
}

/// Errors at or below this level count as exact.
pub const EXACT_TOL: f64 = 1e-12;

/// The rate floor guaranteed for `eps_n = mu_n^3`.
pub const SLOPE_FLOOR: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct RateStudy {
    pub problem: ProblemId,
    pub method: Method,
    pub schedule: EpsSchedule,
    pub reference: ReferenceSpec,
    pub entries: Vec<RateEntry>,
    /// Least-squares slope of `log E_n` against `log mu_n`; `None` when every error is exact.
    pub slope: Option<f64>,
    /// `E_{2n} / E_n` for consecutive ladder entries.
    pub ratios: Vec<f64>,
    /// Every `E_n <= EXACT_TOL`.
    pub exact: bool,
    pub strictly_decreasing: bool,
    pub reference_gate: Option<ReferenceGate>,
}

impl RateStudy {
    pub fn slope_ok(&self) -> bool {
        self.exact || self.slope.is_some_and(|s| s >= SLOPE_FLOOR)
    }

    pub fn monotone_ok(&self) -> bool {
        self.exact || self.strictly_decreasing
    }

    pub fn passed(&self) -> bool {
        self.slope_ok() && self.monotone_ok() && self.reference_gate.as_ref().is_none_or(|g| g.passed)
    }
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Solves a catalog problem over a ladder of grid sizes and fits the error slope.
pub fn rate_study(
    problem: &SweepingProblem,
    id: ProblemId,
    ladder: &[usize],
    schedule: &EpsSchedule,
    reference: ReferenceSpec,
) -> Result<RateStudy, HarnessError> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[0] >= w[1]) || ladder[0] == 0 {
        return Err(HarnessError::InvalidStudy("ladder must be nonempty and strictly increasing".into()));
    }
    let max_n = *ladder.last().expect("nonempty");
    let fine = match reference {
        ReferenceSpec::ClosedForm => None,
        ReferenceSpec::FineGrid { n_ref } => {
            if n_ref < 4 * max_n {
                return Err(HarnessError::InvalidStudy(format!("n_ref = {n_ref} must be at least 4 x {max_n}")));
            }
            Some(fine_reference(problem, n_ref)?)
        }
    };
    let reference_gate = match &fine {
        Some((traj, eps_ref)) => {
            let deviation = sup_error(traj, |t| Ok(reference_solution(id, t)))?;
            let bound = 2.0 * rate_bound(traj.grid.mu(), *eps_ref);
            Some(ReferenceGate { n_ref: traj.grid.n(), deviation, bound, passed: deviation <= bound })
        }
        None => None,
    };
    let errors: Vec<Result<f64, HarnessError>> = ladder
        .par_iter()
        .map(|&n| {
            let traj = solve(problem, n, schedule)?;
            match &fine {
                Some((r, _)) => sup_error(&traj, |t| Ok(r.interpolate(t)?)),
                None => sup_error(&traj, |t| Ok(reference_solution(id, t))),
            }
        })
        .collect();
    let mut entries = Vec::with_capacity(ladder.len());
    for (&n, e) in ladder.iter().zip(errors) {
        let mu = problem.horizon / n as f64;
        entries.push(RateEntry { n, mu, eps: schedule.eps(mu), error: e? });
    }
    Ok(summarize(id, problem.options.method, *schedule, reference, entries, reference_gate))
}

fn summarize(
    problem: ProblemId,
    method: Method,
    schedule: EpsSchedule,
    reference: ReferenceSpec,
    entries: Vec<RateEntry>,
    reference_gate: Option<ReferenceGate>,
) -> RateStudy {
    let exact = entries.iter().all(|e| e.error <= EXACT_TOL);
    let slope = if exact || entries.iter().any(|e| e.error <= 0.0) {
        None
    } else {
        let lx: Vec<f64> = entries.iter().map(|e| e.mu.ln()).collect();
        let ly: Vec<f64> = entries.iter().map(|e| e.error.ln()).collect();
        least_squares_slope(&lx, &ly)
    };
    let ratios = entries.windows(2).map(|w| w[1].error / w[0].error).collect();
    let strictly_decreasing = entries.windows(2).all(|w| w[1].error < w[0].error);
    RateStudy { problem, method, schedule, reference, entries, slope, ratios, exact, strictly_decreasing, reference_gate }
}

/// Fine-grid run with exact projections when the sets have closed forms,
/// otherwise with `1e-14` certificates.
fn fine_reference(problem: &SweepingProblem, n_ref: usize) -> Result<(Trajectory, f64), HarnessError> {
    let mut fine = problem.clone();
    let closed = fine.set.at(0.0).has_closed_form();
    fine.options.method = if closed { Method::Exact } else { Method::CuttingPlane };
    let eps = 1e-14;
    let schedule = EpsSchedule::new(eps / (problem.horizon / n_ref as f64).powi(3), 3.0)?;
    let traj = solve(&fine, n_ref, &schedule)?;
    Ok((traj, if closed { 0.0 } else { eps }))
}

/// Sequence `x_n = x + u / n`, `eps_n = n^{-2}`.
pub fn harmonic_sequence(x: &Vector, u: &Vector, ns: &[usize]) -> Vec<(Vector, f64)> {
    ns.iter().map(|&n| (x + u / n as f64, 1.0 / (n as f64 * n as f64))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub target: Vector,
    /// `||z_n - proj(x)||` per sequence entry.
    pub errors: Vec<f64>,
    pub final_error: f64,
    /// No error exceeds twice an earlier one.
    pub within_noise_band: bool,
    pub converged: bool,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.within_noise_band && self.converged
    }
}

/// Final error required by [`stability_study`].
pub const STABILITY_TOL: f64 = 1e-4;

/// Projects each `x_n` with certificate `eps_n` and compares with `proj(x)`.
pub fn stability_study(
    set: &SetDescription,
    x: &Vector,
    sequence: &[(Vector, f64)],
    method: Method,
) -> Result<StabilityReport, HarnessError> {
    if set.regularity().prox_radius().is_none() {
        return Err(HarnessError::InvalidStudy("the set carries no prox-regularity radius".into()));
    }
    if sequence.is_empty() {
        return Err(HarnessError::InvalidStudy("empty sequence".into()));
    }
    let target = exact_project(set, x).map_err(OracleError::from)?;
    let mut errors = Vec::with_capacity(sequence.len());
    for (xn, eps) in sequence {
        let cfg = ProjectorConfig { eps: *eps, max_iter: 1_000_000, ..ProjectorConfig::default() };
        let z = approx_project_with(set, xn, &cfg, method)?.point;
        errors.push((z - &target).norm());
    }
    let mut best = f64::INFINITY;
    let mut within_noise_band = true;
    for &e in &errors {
        if e > 2.0 * best + 1e-15 {
            within_noise_band = false;
        }
        best = best.min(e);
    }
    let final_error = *errors.last().expect("nonempty");
    Ok(StabilityReport { target, errors, final_error, within_noise_band, converged: final_error <= STABILITY_TOL })
}
