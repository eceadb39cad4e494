//! Catching-up algorithm with certified approximate projections for
//! Moreau sweeping processes `x'(t) ∈ -N(C(t); x(t)) + F(t, x(t))`.

pub mod export;
pub mod geometry;
pub mod harness;
pub mod oracles;
pub mod perturbation;
pub mod solver;

/// State vector in `R^d`.
pub type Vector = nalgebra::DVector<f64>;

pub use geometry::{prox_eps0, GeometryError, MovingSet, Regularity, SetDescription, SetKind};
pub use harness::{ProblemId, RateStudy, ReferenceSpec, StabilityReport};
pub use oracles::{approx_project, approx_project_with, Method, OracleError, ProjectionResult, ProjectorConfig};
pub use perturbation::{Perturbation, Selection};
pub use solver::{
    solve, theorem1_audit, AuditReport, EpsSchedule, Grid, SolveMode, SolverError, SolverOptions, SweepingProblem,
    Trajectory,
};
