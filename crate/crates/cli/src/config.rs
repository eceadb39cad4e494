//! TOML run configuration.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use sweep_core::geometry::{
    Affine, ConvexFn, DistanceFn, MaxOf, MovingSet, SetDescription, SquaredDistance,
};
use sweep_core::harness::{catalog_problem, ProblemId, ReferenceSpec};
use sweep_core::oracles::{Method, ProjectorConfig};
use sweep_core::perturbation::{Perturbation, Selection, DEFAULT_GAMMA};
use sweep_core::solver::{EpsSchedule, SolveMode, SolverOptions, SweepingProblem};
use sweep_core::Vector;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog id or `inline`.
    pub problem: String,
    pub horizon: Option<f64>,
    pub n: Option<usize>,
    pub ladder: Option<Vec<usize>>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    pub reference: Option<ReferenceConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Inline problem or target of `project`.
    pub set: Option<SetConfig>,
    /// Translation velocity of the inline set; fixed set when absent.
    pub velocity: Option<Vec<f64>>,
    pub perturbation: Option<PerturbationConfig>,
    pub x0: Option<Vec<f64>>,
    pub mode: Option<ModeConfig>,
    /// Point projected by `project`.
    pub point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "three")]
    pub p: f64,
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { c: 1.0, p: 3.0 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub method: Option<String>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
    pub feas_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum ReferenceConfig {
    ClosedForm,
    FineGrid { n_ref: usize },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum SetConfig {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `<a, x> >= c`.
    Halfspace { a: Vec<f64>, c: f64 },
    /// `g(x) <= level`.
    Sublevel { function: FunctionConfig, level: f64, slater: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum FunctionConfig {
    SquaredDistance { center: Vec<f64>, #[serde(default)] offset: f64 },
    Distance { center: Vec<f64>, #[serde(default)] offset: f64 },
    Affine { a: Vec<f64>, b: f64 },
    /// `max_i <a_i, x> + b_i`.
    MaxAffine { a: Vec<Vec<f64>>, b: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum PerturbationConfig {
    Zero,
    LinearDecay,
    ConstantSet { set: SetConfig },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum ModeConfig {
    ProxRegular { rho: Option<f64> },
    Subsmooth,
    FixedSet,
}

/// Configuration or validation failure (exit code 1).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(msg.to_string())
}

fn vec_of(xs: &[f64]) -> Vector {
    Vector::from_vec(xs.to_vec())
}

fn function(cfg: &FunctionConfig) -> Result<ConvexFn, ConfigError> {
    Ok(match cfg {
        FunctionConfig::SquaredDistance { center, offset } => {
            Arc::new(SquaredDistance { center: vec_of(center), offset: *offset })
        }
        FunctionConfig::Distance { center, offset } => Arc::new(DistanceFn { center: vec_of(center), offset: *offset }),
        FunctionConfig::Affine { a, b } => Arc::new(Affine { a: vec_of(a), b: *b }),
        FunctionConfig::MaxAffine { a, b } => {
            if a.len() != b.len() || a.is_empty() {
                return Err(bad("max-affine needs matching nonempty `a` rows and `b`"));
            }
            let terms: Vec<ConvexFn> =
                a.iter().zip(b).map(|(ai, bi)| Arc::new(Affine { a: vec_of(ai), b: *bi }) as ConvexFn).collect();
            Arc::new(MaxOf::new(terms))
        }
    })
}

pub fn build_set(cfg: &SetConfig) -> Result<SetDescription, ConfigError> {
    match cfg {
        SetConfig::Ball { center, radius } => SetDescription::ball(vec_of(center), *radius),
        SetConfig::Box { lo, hi } => SetDescription::boxed(vec_of(lo), vec_of(hi)),
        SetConfig::Halfspace { a, c } => SetDescription::halfspace(vec_of(a), *c),
        SetConfig::Sublevel { function: g, level, slater } => {
            SetDescription::sublevel(function(g)?, *level, vec_of(slater))
        }
    }
    .map_err(bad)
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| bad(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return Err(bad(format!("horizon = {t} must be positive")));
            }
        }
        if self.n == Some(0) {
            return Err(bad("n must be >= 1"));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(bad(format!("gamma = {g} must be positive")));
            }
        }
        self.schedule()?;
        self.method()?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<EpsSchedule, ConfigError> {
        EpsSchedule::new(self.schedule.c, self.schedule.p).map_err(bad)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(DEFAULT_GAMMA)
    }

    pub fn catalog_id(&self) -> Result<Option<ProblemId>, ConfigError> {
        if self.problem == "inline" {
            Ok(None)
        } else {
            self.problem.parse().map(Some).map_err(bad)
        }
    }

    pub fn method(&self) -> Result<Option<Method>, ConfigError> {
        self.oracle.method.as_deref().map(str::parse).transpose().map_err(bad)
    }

    pub fn projector(&self) -> ProjectorConfig {
        let d = ProjectorConfig::default();
        ProjectorConfig {
            eps: self.oracle.eps.unwrap_or(d.eps),
            max_iter: self.oracle.max_iter.unwrap_or(d.max_iter),
            feas_tol: self.oracle.feas_tol.unwrap_or(d.feas_tol),
        }
    }

    pub fn solver_options(&self, permissive: bool) -> Result<SolverOptions, ConfigError> {
        let d = SolverOptions::default();
        let method = match (self.method()?, self.catalog_id()?) {
            (Some(m), _) => m,
            (None, Some(id)) => id.default_method(),
            (None, None) => Method::Auto,
        };
        Ok(SolverOptions {
            method,
            max_iter: self.oracle.max_iter.unwrap_or(d.max_iter),
            feas_tol: self.oracle.feas_tol.unwrap_or(d.feas_tol),
            permissive,
        })
    }

    pub fn n(&self) -> Result<usize, ConfigError> {
        self.n.ok_or_else(|| bad("`n` is required"))
    }

    pub fn ladder(&self) -> Result<Vec<usize>, ConfigError> {
        let ladder = self.ladder.clone().ok_or_else(|| bad("`ladder` is required"))?;
        if ladder.is_empty() || ladder[0] == 0 || ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("`ladder` must be a strictly increasing list of positive integers"));
        }
        Ok(ladder)
    }

    pub fn reference(&self) -> ReferenceSpec {
        match self.reference {
            Some(ReferenceConfig::FineGrid { n_ref }) => ReferenceSpec::FineGrid { n_ref },
            _ => ReferenceSpec::ClosedForm,
        }
    }

    pub fn target_set(&self) -> Result<SetDescription, ConfigError> {
        build_set(self.set.as_ref().ok_or_else(|| bad("`[set]` is required"))?)
    }

    pub fn point(&self) -> Result<Vector, ConfigError> {
        self.point.as_deref().map(vec_of).ok_or_else(|| bad("`point` is required"))
    }

    /// The sweeping problem described by the config.
    pub fn problem(&self, permissive: bool) -> Result<SweepingProblem, ConfigError> {
        let options = self.solver_options(permissive)?;
        if let Some(id) = self.catalog_id()? {
            if self.horizon.is_some_and(|t| t != id.horizon()) {
                return Err(bad(format!("catalog problem `{id}` has horizon {}", id.horizon())));
            }
            return catalog_problem(id, options, self.gamma()).map_err(bad);
        }
        let base = self.target_set()?;
        let dim = base.dim();
        let set = match &self.velocity {
            Some(v) => MovingSet::Translating { base, velocity: vec_of(v) },
            None => MovingSet::Fixed(base),
        };
        let perturbation = match self.perturbation.as_ref().unwrap_or(&PerturbationConfig::Zero) {
            PerturbationConfig::Zero => Perturbation::zero(dim),
            PerturbationConfig::LinearDecay => Perturbation::linear_decay(),
            PerturbationConfig::ConstantSet { set } => Perturbation::constant_set(build_set(set)?).map_err(bad)?,
        };
        let selection = Selection::new(perturbation, self.gamma()).map_err(bad)?;
        let x0 = vec_of(self.x0.as_deref().ok_or_else(|| bad("`x0` is required for inline problems"))?);
        let mode = match self.mode.as_ref() {
            None => SolveMode::ProxRegular(f64::INFINITY),
            Some(ModeConfig::ProxRegular { rho }) => SolveMode::ProxRegular(rho.unwrap_or(f64::INFINITY)),
            Some(ModeConfig::Subsmooth) => SolveMode::Subsmooth,
            Some(ModeConfig::FixedSet) => SolveMode::FixedSet,
        };
        SweepingProblem::new(set, selection, x0, self.horizon.unwrap_or(1.0), mode, options).map_err(bad)
    }

    pub fn out_dir<'a>(&'a self, flag: Option<&'a Path>) -> &'a Path {
        flag.or(self.output.dir.as_deref().map(Path::new)).unwrap_or(Path::new("."))
    }

    /// `--seed`, then the config, then the catalog default.
    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or_else(|| self.catalog_id().ok().flatten().map_or(0, |id| id.seed()))
    }
}
