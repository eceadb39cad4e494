//! Certified approximate projections.
//!
//! Every strategy returns a feasible point `z` of the target set together with
//! a certificate `eps_hat` such that `||x - z||^2 <= d_C(x)^2 + eps_hat`:
//!
//! * closed-form sets are projected exactly (`eps_hat = 0`);
//! * [`frank_wolfe_project`] certifies through the Frank–Wolfe duality gap;
//! * [`cutting_plane_project`] certifies through an outer polyhedral
//!   approximation, whose projection gives a lower bound on `d_C(x)^2`,
//!   and a feasible point found on the segment towards the Slater point.

mod cutting_plane;
mod frank_wolfe;
mod polyhedron;

pub use cutting_plane::{cutting_plane_project, cutting_plane_project_traced};
pub use frank_wolfe::{frank_wolfe_project, LinearMinimizationOracle, SetLmo};
pub use polyhedron::{project_onto_polyhedron, Cut, PolyhedralProjection};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{exact_project, residual, GeometryError, SetDescription, SetKind};
use crate::Vector;

/// Requested certificate and work budget for one projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorConfig {
    pub eps: f64,
    pub max_iter: usize,
    pub feas_tol: f64,
}

impl Default for ProjectorConfig {
    fn default() -> Self {
        Self { eps: 1e-8, max_iter: 10_000, feas_tol: 1e-10 }
    }
}

impl ProjectorConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(OracleError::InvalidConfig(format!("eps = {} must be positive", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(OracleError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.feas_tol >= 0.0) {
            return Err(OracleError::InvalidConfig("feas_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Which projection route produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Closed form when available, cutting planes otherwise.
    Auto,
    Exact,
    FrankWolfe,
    CuttingPlane,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Method::Auto),
            "exact" => Ok(Method::Exact),
            "frank-wolfe" | "fw" => Ok(Method::FrankWolfe),
            "cutting-plane" | "cp" => Ok(Method::CuttingPlane),
            other => Err(format!("unknown projection method `{other}`")),
        }
    }
}

/// A feasible point with its certified suboptimality.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vector,
    /// `||x - point||^2 <= d_C(x)^2 + certified_eps`.
    pub certified_eps: f64,
    pub iterations: usize,
    /// `false` when the budget ran out before `certified_eps <= eps`.
    pub converged: bool,
    pub method: Method,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("projection route not available for set kind `{0}`")]
    UnsupportedKind(&'static str),
    #[error("iteration budget exhausted with certificate {:e}", .0.certified_eps)]
    BudgetExhausted(Box<ProjectionResult>),
    #[error("zero subgradient at an infeasible point (invalid convex oracle)")]
    ZeroSubgradient,
    #[error("invalid projector configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl OracleError {
    /// The best available result for budget failures.
    pub fn partial_result(&self) -> Option<&ProjectionResult> {
        match self {
            OracleError::BudgetExhausted(r) => Some(r),
            _ => None,
        }
    }
}

/// Floating-point allowance added to iterative certificates.
pub(crate) fn rounding_slack(sq_dist: f64) -> f64 {
    16.0 * f64::EPSILON * (1.0 + sq_dist)
}

/// Outcome of a separation query against `{g <= level}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    Member,
    /// Every member `y` satisfies `<normal, y> <= offset`, while `<normal, x> > offset`.
    Hyperplane { normal: Vector, offset: f64 },
}

/// Separation oracle for sublevel sets.
///
/// For `g(x) > level` the subgradient `x* = subgrad(x)` satisfies
/// `<x*, y> <= <x*, x> - (g(x) - level)` on the whole sublevel set.
pub fn separation_oracle(set: &SetDescription, x: &Vector) -> Result<Separation, OracleError> {
    let SetKind::Sublevel { g, level, .. } = set.kind() else {
        return Err(OracleError::UnsupportedKind(set.kind().name()));
    };
    let gx = g.eval(x);
    if gx <= *level {
        return Ok(Separation::Member);
    }
    let normal = g.subgradient(x);
    if normal.iter().all(|c| *c == 0.0) {
        return Err(OracleError::ZeroSubgradient);
    }
    let offset = normal.dot(x) - (gx - level);
    Ok(Separation::Hyperplane { normal, offset })
}

/// Certified `eps`-approximate projection of `x` onto `set` using the default route.
pub fn approx_project(
    set: &SetDescription,
    x: &Vector,
    cfg: &ProjectorConfig,
) -> Result<ProjectionResult, OracleError> {
    approx_project_with(set, x, cfg, Method::Auto)
}

/// Certified projection through an explicit route.
pub fn approx_project_with(
    set: &SetDescription,
    x: &Vector,
    cfg: &ProjectorConfig,
    method: Method,
) -> Result<ProjectionResult, OracleError> {
    cfg.validate()?;
    if x.len() != set.dim() {
        return Err(GeometryError::DimensionMismatch { expected: set.dim(), got: x.len() }.into());
    }
    let method = match method {
        Method::Auto if set.has_closed_form() => Method::Exact,
        Method::Auto => Method::CuttingPlane,
        m => m,
    };
    if residual(set, x) <= 0.0 {
        return Ok(ProjectionResult { point: x.clone(), certified_eps: 0.0, iterations: 0, converged: true, method });
    }
    match method {
        Method::Exact => Ok(ProjectionResult {
            point: exact_project(set, x)?,
            certified_eps: 0.0,
            iterations: 0,
            converged: true,
            method,
        }),
        Method::FrankWolfe => {
            let lmo = SetLmo::new(set)?;
            let start = lmo.default_start();
            frank_wolfe_project(&lmo, x, &start, cfg)
        }
        Method::CuttingPlane => cutting_plane_project(set, x, cfg),
        Method::Auto => unreachable!(),
    }
}

#[cfg(test)]
mod tests;
